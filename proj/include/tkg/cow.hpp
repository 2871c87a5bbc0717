#pragma once

#include <memory>

namespace tkg {

/// Copy-on-write access to shared immutable state. The holder must be the
/// only party able to hand out new references to `ptr` (true for drafts that
/// have not been published yet), so a use count of one means exclusive.
template <class T>
T& cow_mut(std::shared_ptr<const T>& ptr) {
  if (!ptr) {
    ptr = std::make_shared<const T>();
  } else if (ptr.use_count() > 1) {
    ptr = std::make_shared<const T>(*ptr);
  }
  return const_cast<T&>(*ptr);
}

/// Value wrapper that shares its payload between copies until one of them
/// is mutated.
template <class T>
class Cow {
 public:
  Cow() : ptr_(std::make_shared<const T>()) {}
  explicit Cow(T value) : ptr_(std::make_shared<const T>(std::move(value))) {}

  const T& get() const noexcept { return *ptr_; }
  const T& operator*() const noexcept { return *ptr_; }
  const T* operator->() const noexcept { return ptr_.get(); }
  T& mut() { return cow_mut(ptr_); }

 private:
  std::shared_ptr<const T> ptr_;
};

}  // namespace tkg

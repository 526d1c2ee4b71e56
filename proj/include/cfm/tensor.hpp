#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cfm/errors.hpp"

namespace cfm {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // sized like data iff requires_grad
  bool requires_grad = false;
};

// Dense row-major N-d array. Value type with shared storage; contents are
// immutable once an op has consumed them except for gradient accumulation
// and explicit optimizer updates.
template <typename T>
class Tensor {
 public:
  using Scalar = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0)) {
    validate_shape(shape);
    impl_ = std::make_shared<TensorImpl<T>>();
    impl_->data.assign(static_cast<size_t>(shape_numel(shape)), fill);
    impl_->shape = std::move(shape);
  }

  Tensor(Shape shape, std::vector<T> values) {
    validate_shape(shape);
    if (static_cast<int64_t>(values.size()) != shape_numel(shape))
      throw ShapeError("Tensor: " + std::to_string(values.size()) +
                       " values for shape " + shape_str(shape));
    impl_ = std::make_shared<TensorImpl<T>>();
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
  }

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor full(Shape s, T v) { return Tensor(std::move(s), v); }
  static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int64_t dim(int i) const { return impl_->shape.at(static_cast<size_t>(i)); }
  int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }

  std::vector<T>& data() { return impl_->data; }
  const std::vector<T>& data() const { return impl_->data; }
  T* ptr() { return impl_->data.data(); }
  const T* ptr() const { return impl_->data.data(); }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }

  void set_requires_grad(bool b) {
    impl_->requires_grad = b;
    if (b)
      impl_->grad.assign(impl_->data.size(), T(0));
    else
      impl_->grad.clear();
  }

  std::vector<T>& grad() {
    require_grad_buffer();
    return impl_->grad;
  }
  const std::vector<T>& grad() const {
    require_grad_buffer();
    return impl_->grad;
  }

  void zero_grad() {
    if (impl_ && impl_->requires_grad)
      impl_->grad.assign(impl_->data.size(), T(0));
  }

  T value() const {
    if (numel() != 1) throw ShapeError("Tensor::value: tensor is not scalar");
    return impl_->data[0];
  }

  T& at(std::initializer_list<int64_t> idx) {
    return impl_->data[static_cast<size_t>(flat_index(idx))];
  }
  T at(std::initializer_list<int64_t> idx) const {
    return impl_->data[static_cast<size_t>(flat_index(idx))];
  }

  // Deep copy; the copy never carries grad state.
  Tensor clone() const {
    Tensor t(impl_->shape, impl_->data);
    return t;
  }

  std::shared_ptr<TensorImpl<T>> impl() const { return impl_; }

 private:
  int64_t flat_index(std::initializer_list<int64_t> idx) const {
    if (idx.size() != impl_->shape.size())
      throw ShapeError("Tensor::at: rank mismatch");
    int64_t flat = 0;
    size_t k = 0;
    for (int64_t i : idx) {
      const int64_t d = impl_->shape[k];
      if (i < 0 || i >= d) throw ShapeError("Tensor::at: index out of range");
      flat = flat * d + i;
      ++k;
    }
    return flat;
  }

  void require_grad_buffer() const {
    if (!impl_ || !impl_->requires_grad)
      throw ValueError("Tensor: grad requested on tensor without requires_grad");
  }

  static void validate_shape(const Shape& s) {
    if (s.empty()) throw ShapeError("Tensor: empty shape (use {1} for scalars)");
    for (int64_t d : s)
      if (d <= 0) throw ShapeError("Tensor: non-positive dimension in " + shape_str(s));
  }

  std::shared_ptr<TensorImpl<T>> impl_;
};

// Complex-valued array stored as split real/imaginary planes.
template <typename T>
struct ComplexTensor {
  Tensor<T> re;
  Tensor<T> im;

  ComplexTensor() = default;
  ComplexTensor(Tensor<T> re_, Tensor<T> im_) : re(std::move(re_)), im(std::move(im_)) {
    if (re.shape() != im.shape())
      throw ShapeError("ComplexTensor: real/imag shape mismatch " +
                       shape_str(re.shape()) + " vs " + shape_str(im.shape()));
  }

  explicit ComplexTensor(Shape s) : re(s), im(std::move(s)) {}

  const Shape& shape() const { return re.shape(); }
  int64_t numel() const { return re.numel(); }
  bool defined() const { return re.defined() && im.defined(); }
};

}  // namespace cfm

#pragma once

#include <concepts>
#include <functional>
#include <span>
#include <string>
#include <utility>

namespace rgsa {

/// Anything that maps an input point to a scalar output.
template <class F>
concept ScalarModel = requires(const F& f, std::span<const double> x) {
  { f(x) } -> std::convertible_to<double>;
};

/// Type-erased model with a name and a fixed input dimension.
class Model {
 public:
  using Function = std::function<double(std::span<const double>)>;

  Model(std::string name, std::size_t dim, Function f)
      : name_(std::move(name)), dim_(dim), f_(std::move(f)) {}

  template <ScalarModel F>
    requires(!std::same_as<std::decay_t<F>, Model>)
  Model(std::string name, std::size_t dim, F f)
      : Model(std::move(name), dim, Function([g = std::move(f)](std::span<const double> x) {
                return static_cast<double>(g(x));
              })) {}

  double operator()(std::span<const double> x) const { return f_(x); }
  std::size_t dim() const { return dim_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::size_t dim_;
  Function f_;
};

}  // namespace rgsa

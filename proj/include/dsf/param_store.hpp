#pragma once

#include <map>
#include <string>
#include <vector>

#include "dsf/tensor.hpp"

namespace dsf {

struct Param {
  Tensor value;
  Tensor grad;
};

/// Named parameters with gradient buffers, iterated in lexicographic order.
class ParamStore {
 public:
  /// Registers a parameter; the gradient buffer is zero-initialized.
  Param& add(const std::string& name, Tensor value);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  const Tensor& value(const std::string& name) const { return get(name).value; }
  Tensor& grad(const std::string& name) { return get(name).grad; }

  void zero_grad();
  std::size_t size() const { return entries_.size(); }
  std::size_t numel() const;
  std::vector<std::string> names() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, Param> entries_;
};

/// Copy of `store` with every value rounded through 32-bit float storage.
ParamStore round_to_float32(const ParamStore& store);

}  // namespace dsf

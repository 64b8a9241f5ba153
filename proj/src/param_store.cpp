#include "dsf/param_store.hpp"

#include "dsf/errors.hpp"

namespace dsf {

Param& ParamStore::add(const std::string& name, Tensor value) {
  if (entries_.count(name) != 0) throw ShapeError("duplicate parameter '" + name + "'");
  Tensor grad(value.shape());
  auto [it, ok] = entries_.emplace(name, Param{std::move(value), std::move(grad)});
  return it->second;
}

Param& ParamStore::get(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return it->second;
}

const Param& ParamStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : entries_) p.grad.fill(0.0);
}

std::size_t ParamStore::numel() const {
  std::size_t total = 0;
  for (const auto& [name, p] : entries_) total += p.value.size();
  return total;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, p] : entries_) out.push_back(name);
  return out;
}

ParamStore round_to_float32(const ParamStore& store) {
  ParamStore out;
  for (const auto& [name, p] : store) {
    Tensor v = p.value;
    for (double& x : v.values()) x = static_cast<double>(static_cast<float>(x));
    out.add(name, std::move(v));
  }
  return out;
}

}  // namespace dsf

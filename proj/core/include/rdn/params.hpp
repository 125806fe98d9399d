#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "rdn/tensor.hpp"

namespace rdn {

/// Named tensors for one forward pass; leaves during optimization, constants
/// otherwise.
using TensorMap = std::unordered_map<std::string, Tensor>;

// Ordered collection of named parameter arrays. The persistent form of every
// optimizable quantity; iteration order is insertion order so derived state
// (optimizer moments, serialized blobs) lines up deterministically.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<double> value;
  };

  void add(std::string name, Shape shape, std::vector<double> value) {
    if (index_.count(name)) throw Error("duplicate parameter name: " + name);
    if (numel(shape) != static_cast<int64_t>(value.size())) {
      throw ShapeError("parameter " + name + ": value length mismatch");
    }
    index_[name] = entries_.size();
    entries_.push_back({std::move(name), std::move(shape), std::move(value)});
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Entry& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter: " + name);
    return entries_[it->second];
  }
  const Entry& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter: " + name);
    return entries_[it->second];
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  TensorMap make_leaves(Tape& tape) const {
    TensorMap m;
    for (const Entry& e : entries_) m[e.name] = tape.leaf(e.shape, e.value);
    return m;
  }
  TensorMap make_constants() const {
    TensorMap m;
    for (const Entry& e : entries_) m[e.name] = Tensor::constant(e.shape, e.value);
    return m;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace rdn

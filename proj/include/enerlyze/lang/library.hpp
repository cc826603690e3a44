#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enerlyze/lang/ast.hpp"

namespace enerlyze::lang {

/// Classes of interpreter state touched by library functions. Used by the
/// read/write-set analyses of the optimizer.
enum StateClass : unsigned {
  kStateNone = 0,
  kStateLists = 1u << 0,
  kStateBuffers = 1u << 1,
  kStateOutput = 1u << 2,
  kStateArrays = 1u << 3,
  kStateHeap = 1u << 4,  // allocates a fresh object
};

struct LibraryParam {
  enum class Kind { Exact, AnyScalar, AnyArray } kind = Kind::Exact;
  Type type;
};

struct LibraryFunction {
  std::string name;
  std::vector<LibraryParam> params;
  Type result;
  unsigned reads = kStateNone;
  unsigned writes = kStateNone;
  /// Can raise a runtime error for some arguments (bounds, null).
  bool may_fail = false;

  /// No writes and no output: calls may be hoisted or deduplicated when the
  /// state classes in `reads` are unchanged.
  bool pure() const { return writes == kStateNone; }
};

/// The fixed registry, in a stable order (indices are part of the checked
/// program's annotations).
std::span<const LibraryFunction> library_functions();
std::optional<int> find_library_function(const std::string& name);
const LibraryFunction& library_function(int index);

}  // namespace enerlyze::lang

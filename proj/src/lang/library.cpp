#include "enerlyze/lang/library.hpp"

#include <unordered_map>

namespace enerlyze::lang {
namespace {

LibraryParam exact(TypeKind k) { return {LibraryParam::Kind::Exact, Type::of(k)}; }
LibraryParam object() { return {LibraryParam::Kind::Exact, Type::object()}; }
LibraryParam any_scalar() { return {LibraryParam::Kind::AnyScalar, {}}; }
LibraryParam any_array() { return {LibraryParam::Kind::AnyArray, {}}; }

std::vector<LibraryFunction> build_registry() {
  using K = TypeKind;
  const Type v = Type::of(K::Void);
  const Type i = Type::of(K::Int);
  const Type f = Type::of(K::Float);
  const Type o = Type::object();
  return {
      // Object lists.
      {"list_new", {}, o, kStateNone, kStateHeap, false},
      {"list_add", {object(), object()}, v, kStateLists, kStateLists, true},
      {"list_get", {object(), exact(K::Int)}, o, kStateLists, kStateNone, true},
      {"list_set", {object(), exact(K::Int), object()}, v, kStateLists, kStateLists, true},
      {"list_size", {object()}, i, kStateLists, kStateNone, true},
      // Float buffers with a write position and a limit.
      {"buffer_new", {exact(K::Int)}, o, kStateNone, kStateHeap, true},
      {"buffer_put", {object(), exact(K::Float)}, v, kStateBuffers, kStateBuffers, true},
      {"buffer_get", {object(), exact(K::Int)}, f, kStateBuffers, kStateNone, true},
      {"buffer_set", {object(), exact(K::Int), exact(K::Float)}, v, kStateBuffers, kStateBuffers, true},
      {"buffer_limit", {object()}, i, kStateBuffers, kStateNone, true},
      {"buffer_position", {object()}, i, kStateBuffers, kStateNone, true},
      {"buffer_clear", {object()}, v, kStateBuffers, kStateBuffers, true},
      {"buffer_bulk_put", {object(), object()}, v, kStateBuffers, kStateBuffers, true},
      // Math.
      {"math_sqrt", {exact(K::Float)}, f, kStateNone, kStateNone, false},
      {"math_sin", {exact(K::Float)}, f, kStateNone, kStateNone, false},
      {"math_cos", {exact(K::Float)}, f, kStateNone, kStateNone, false},
      {"math_abs", {exact(K::Float)}, f, kStateNone, kStateNone, false},
      {"math_max", {exact(K::Float), exact(K::Float)}, f, kStateNone, kStateNone, false},
      {"math_min", {exact(K::Float), exact(K::Float)}, f, kStateNone, kStateNone, false},
      {"math_floor", {exact(K::Float)}, i, kStateNone, kStateNone, false},
      {"math_imax", {exact(K::Int), exact(K::Int)}, i, kStateNone, kStateNone, false},
      {"math_imin", {exact(K::Int), exact(K::Int)}, i, kStateNone, kStateNone, false},
      {"math_iabs", {exact(K::Int)}, i, kStateNone, kStateNone, false},
      // Arrays and output.
      {"array_length", {any_array()}, i, kStateNone, kStateNone, true},
      {"emit", {any_scalar()}, v, kStateNone, kStateOutput, false},
  };
}

}  // namespace

std::span<const LibraryFunction> library_functions() {
  static const std::vector<LibraryFunction> registry = build_registry();
  return registry;
}

std::optional<int> find_library_function(const std::string& name) {
  static const std::unordered_map<std::string, int> by_name = [] {
    std::unordered_map<std::string, int> m;
    const auto fns = library_functions();
    for (std::size_t k = 0; k < fns.size(); ++k) m.emplace(fns[k].name, static_cast<int>(k));
    return m;
  }();
  if (auto it = by_name.find(name); it != by_name.end()) return it->second;
  return std::nullopt;
}

const LibraryFunction& library_function(int index) {
  return library_functions()[static_cast<std::size_t>(index)];
}

}  // namespace enerlyze::lang

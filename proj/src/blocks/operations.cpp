#include <array>
#include <unordered_map>

#include "enerlyze/blocks.hpp"
#include "enerlyze/lang/library.hpp"

namespace enerlyze {

const char* to_string(OpCategory c) {
  switch (c) {
    case OpCategory::Arithmetic: return "Arithmetic";
    case OpCategory::Boolean: return "Boolean";
    case OpCategory::Comparison: return "Comparison";
    case OpCategory::Bitwise: return "Bitwise";
    case OpCategory::Reference: return "Reference";
    case OpCategory::Function: return "Function";
    case OpCategory::Control: return "Control";
    case OpCategory::Assign: return "Assign";
    case OpCategory::Declaration: return "Declaration";
    case OpCategory::Conversion: return "Conversion";
    case OpCategory::Library: return "Library";
  }
  return "?";
}

std::string group_of(OpCategory c) {
  switch (c) {
    case OpCategory::Reference: return "Array";
    case OpCategory::Comparison:
    case OpCategory::Boolean: return "Boolean";
    case OpCategory::Bitwise:
    case OpCategory::Conversion:
    case OpCategory::Arithmetic: return "Arithmetic";
    default: return to_string(c);
  }
}

std::span<const std::string> group_names() {
  static const std::array<std::string, 8> names = {"Assign",   "Declaration", "Control",    "Array",
                                                   "Function", "Boolean",     "Arithmetic", "Library"};
  return names;
}

namespace {

const char* const kNumericSigs[] = {"int_int", "int_float", "float_int", "float_float"};
const char* const kValueTypes[] = {"int", "float", "bool", "Object", "int[]", "float[]", "char[]"};
const char* const kRefTypes[] = {"Object", "int[]", "float[]", "char[]"};

struct Universe {
  std::vector<OperationKind> ops;
  std::unordered_map<std::string, int> index;

  void add(OpCategory c, std::string name) {
    index.emplace(name, static_cast<int>(ops.size()));
    ops.push_back({c, std::move(name)});
  }

  Universe() {
    using C = OpCategory;
    for (const char* op : {"Addition", "Subtraction", "Multi", "Division"})
      for (const char* sig : kNumericSigs) add(C::Arithmetic, std::string(op) + "_" + sig);
    add(C::Arithmetic, "Increment");
    add(C::Arithmetic, "Decrement");
    add(C::Arithmetic, "Negation_int");
    add(C::Arithmetic, "Negation_float");

    for (const char* op : {"Less", "LessEqual", "Greater", "GreaterEqual"})
      for (const char* sig : kNumericSigs) add(C::Comparison, std::string(op) + "_" + sig);
    for (const char* sig : kNumericSigs) add(C::Comparison, std::string("Equal_") + sig);
    add(C::Comparison, "Equal_bool_bool");
    for (const char* r : kRefTypes) {
      add(C::Comparison, std::string("Equal_") + r + "_" + r);
      add(C::Comparison, std::string("Equal_") + r + "_null");
      add(C::Comparison, std::string("Equal_null_") + r);
    }
    add(C::Comparison, "Equal_null_null");

    add(C::Boolean, "And");
    add(C::Boolean, "Or");
    add(C::Boolean, "Not");

    add(C::Bitwise, "BitAnd_int_int");
    add(C::Bitwise, "BitOr_int_int");
    add(C::Bitwise, "SignedShiftLeft_int_int");
    add(C::Bitwise, "SignedShiftRight_int_int");

    add(C::Reference, "ArrayReference");

    add(C::Control, "MethodInvocation");
    add(C::Control, "BlockGoto_if");
    add(C::Control, "BlockGoto_for");
    add(C::Control, "BlockGoto_while");
    add(C::Control, "BlockGoto_switch");
    add(C::Control, "FieldReference");

    for (const char* t : kValueTypes) add(C::Function, std::string("Parameter_") + t);
    for (const char* t : kValueTypes) add(C::Function, std::string("Return_") + t);
    add(C::Function, "Return_void");

    for (const char* t : kValueTypes) add(C::Assign, std::string("Assign_") + t + "_" + t);
    add(C::Assign, "Assign_float_int");
    for (const char* r : kRefTypes) add(C::Assign, std::string("Assign_") + r + "_null");

    for (const char* t : kValueTypes) add(C::Declaration, std::string("Declaration_") + t);
    add(C::Declaration, "New_Object");
    add(C::Declaration, "New_int[]");
    add(C::Declaration, "New_float[]");
    add(C::Declaration, "New_char[]");

    add(C::Conversion, "Conversion_int_float");
    add(C::Conversion, "Conversion_float_int");

    for (const auto& f : lang::library_functions()) add(C::Library, "Library_" + f.name);
  }
};

const Universe& universe() {
  static const Universe u;
  return u;
}

std::string binary_name(const lang::Expr& e) {
  using lang::BinaryOp;
  const std::string sig = lang::signature(e.operands[0].type) + "_" + lang::signature(e.operands[1].type);
  switch (e.binary_op) {
    case BinaryOp::Add: return "Addition_" + sig;
    case BinaryOp::Sub: return "Subtraction_" + sig;
    case BinaryOp::Mul: return "Multi_" + sig;
    case BinaryOp::Div: return "Division_" + sig;
    case BinaryOp::Lt: return "Less_" + sig;
    case BinaryOp::Le: return "LessEqual_" + sig;
    case BinaryOp::Gt: return "Greater_" + sig;
    case BinaryOp::Ge: return "GreaterEqual_" + sig;
    case BinaryOp::Eq:
    case BinaryOp::Ne: return "Equal_" + sig;
    case BinaryOp::And: return "And";
    case BinaryOp::Or: return "Or";
    case BinaryOp::BitAnd: return "BitAnd_int_int";
    case BinaryOp::BitOr: return "BitOr_int_int";
    case BinaryOp::Shl: return "SignedShiftLeft_int_int";
    case BinaryOp::Shr: return "SignedShiftRight_int_int";
  }
  return {};
}

}  // namespace

std::span<const OperationKind> op_universe() { return universe().ops; }

std::optional<int> find_op(std::string_view name) {
  const auto& idx = universe().index;
  if (auto it = idx.find(std::string(name)); it != idx.end()) return it->second;
  return std::nullopt;
}

int op_id(std::string_view name) {
  if (auto i = find_op(name)) return *i;
  throw Error("internal", "unknown operation '" + std::string(name) + "'");
}

namespace ops {

int of_expr(const lang::Expr& e) {
  using lang::ExprKind;
  switch (e.kind) {
    case ExprKind::Field: {
      static const int id = op_id("FieldReference");
      return id;
    }
    case ExprKind::Index: {
      static const int id = op_id("ArrayReference");
      return id;
    }
    case ExprKind::Unary:
      if (e.unary_op == lang::UnaryOp::Not) {
        static const int id = op_id("Not");
        return id;
      }
      return op_id("Negation_" + lang::signature(e.type));
    case ExprKind::Binary: return op_id(binary_name(e));
    case ExprKind::Cast:
      return op_id("Conversion_" + lang::signature(e.operands[0].type) + "_" + lang::signature(e.target));
    case ExprKind::Call:
      if (e.method >= 0) return method_invocation();
      return op_id("Library_" + lang::library_function(e.library).name);
    case ExprKind::NewRecord: {
      static const int id = op_id("New_Object");
      return id;
    }
    case ExprKind::NewArray: return op_id("New_" + lang::signature(e.target));
    default: return -1;
  }
}

int of_declaration(const lang::Stmt& s) { return op_id("Declaration_" + lang::signature(s.decl_type)); }

int of_assign(const lang::Type& target, const lang::Type& value) {
  return op_id("Assign_" + lang::signature(target) + "_" + lang::signature(value));
}

int of_return(const lang::Type& method_return) { return op_id("Return_" + lang::signature(method_return)); }

int parameter(const lang::Type& param) { return op_id("Parameter_" + lang::signature(param)); }

int method_invocation() {
  static const int id = op_id("MethodInvocation");
  return id;
}
int block_goto_if() {
  static const int id = op_id("BlockGoto_if");
  return id;
}
int block_goto_for() {
  static const int id = op_id("BlockGoto_for");
  return id;
}
int block_goto_while() {
  static const int id = op_id("BlockGoto_while");
  return id;
}
int block_goto_switch() {
  static const int id = op_id("BlockGoto_switch");
  return id;
}
int increment() {
  static const int id = op_id("Increment");
  return id;
}
int decrement() {
  static const int id = op_id("Decrement");
  return id;
}

}  // namespace ops
}  // namespace enerlyze

#include "enerlyze/lang/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <set>
#include <unordered_set>

namespace enerlyze::lang {
namespace {

enum class Tok { End, Ident, Keyword, Int, Float, Punct };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourcePos pos;
};

const std::unordered_set<std::string>& keywords() {
  static const std::unordered_set<std::string> k = {
      "record", "global", "int",    "float", "bool",  "char", "void", "Object", "if",   "else", "for",
      "while",  "switch", "case",   "default", "return", "break", "new", "true", "false", "null"};
  return k;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.pos = {line_, col_};
      if (i_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[i_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i_;
        while (j < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_')) ++j;
        t.text = std::string(src_.substr(i_, j - i_));
        t.kind = keywords().count(t.text) ? Tok::Keyword : Tok::Ident;
        advance(j - i_);
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number(t);
      } else {
        lex_punct(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance(std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src_[i_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++i_;
    }
  }

  void skip_space() {
    while (i_ < src_.size()) {
      const char c = src_[i_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance(1);
      } else if (c == '/' && i_ + 1 < src_.size() && src_[i_ + 1] == '/') {
        while (i_ < src_.size() && src_[i_] != '\n') advance(1);
      } else if (c == '/' && i_ + 1 < src_.size() && src_[i_ + 1] == '*') {
        const SourcePos start{line_, col_};
        advance(2);
        while (i_ + 1 < src_.size() && !(src_[i_] == '*' && src_[i_ + 1] == '/')) advance(1);
        if (i_ + 1 >= src_.size()) throw SyntaxError("unterminated comment", start);
        advance(2);
      } else {
        return;
      }
    }
  }

  bool digit_at(std::size_t j) const {
    return j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]));
  }

  void lex_number(Token& t) {
    std::size_t j = i_;
    while (digit_at(j)) ++j;
    bool is_float = false;
    if (j < src_.size() && src_[j] == '.' && digit_at(j + 1)) {
      is_float = true;
      ++j;
      while (digit_at(j)) ++j;
    }
    if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      if (digit_at(k)) {
        is_float = true;
        j = k;
        while (digit_at(j)) ++j;
      }
    }
    if (j < src_.size() && (std::isalpha(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
      throw SyntaxError("malformed number", t.pos);
    t.kind = is_float ? Tok::Float : Tok::Int;
    t.text = std::string(src_.substr(i_, j - i_));
    advance(j - i_);
  }

  void lex_punct(Token& t) {
    static const char* two[] = {"<=", ">=", "==", "!=", "&&", "||", "<<", ">>", "++", "--"};
    if (i_ + 1 < src_.size()) {
      for (const char* p : two) {
        if (src_[i_] == p[0] && src_[i_ + 1] == p[1]) {
          t.kind = Tok::Punct;
          t.text = p;
          advance(2);
          return;
        }
      }
    }
    static const std::string one = "{}()[];,.:=+-*/<>!&|";
    if (one.find(src_[i_]) == std::string::npos)
      throw SyntaxError(std::string("unexpected character '") + src_[i_] + "'", t.pos);
    t.kind = Tok::Punct;
    t.text = std::string(1, src_[i_]);
    advance(1);
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return 1;
    case BinaryOp::And: return 2;
    case BinaryOp::BitOr: return 3;
    case BinaryOp::BitAnd: return 4;
    case BinaryOp::Eq:
    case BinaryOp::Ne: return 5;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return 6;
    case BinaryOp::Shl:
    case BinaryOp::Shr: return 7;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 8;
    case BinaryOp::Mul:
    case BinaryOp::Div: return 9;
  }
  return 0;
}

constexpr int kUnaryPrec = 10;
constexpr int kPostfixPrec = 11;
constexpr int kPrimaryPrec = 12;

std::optional<BinaryOp> binary_op(const Token& t) {
  if (t.kind != Tok::Punct) return std::nullopt;
  static const std::pair<const char*, BinaryOp> table[] = {
      {"||", BinaryOp::Or},  {"&&", BinaryOp::And}, {"|", BinaryOp::BitOr}, {"&", BinaryOp::BitAnd},
      {"==", BinaryOp::Eq},  {"!=", BinaryOp::Ne},  {"<", BinaryOp::Lt},    {"<=", BinaryOp::Le},
      {">", BinaryOp::Gt},   {">=", BinaryOp::Ge},  {"<<", BinaryOp::Shl},  {">>", BinaryOp::Shr},
      {"+", BinaryOp::Add},  {"-", BinaryOp::Sub},  {"*", BinaryOp::Mul},   {"/", BinaryOp::Div}};
  for (const auto& [s, op] : table)
    if (t.text == s) return op;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program p;
    std::set<std::string> records, globals, methods;
    while (!at_end()) {
      if (is_kw("record")) {
        RecordDecl r = record_decl();
        if (!records.insert(r.name).second) throw SyntaxError("duplicate record '" + r.name + "'", r.pos);
        p.records.push_back(std::move(r));
      } else if (is_kw("global")) {
        next();
        GlobalDecl g;
        g.pos = peek().pos;
        g.type = type();
        g.name = ident();
        expect(";");
        if (!globals.insert(g.name).second) throw SyntaxError("duplicate global '" + g.name + "'", g.pos);
        p.globals.push_back(std::move(g));
      } else {
        MethodDecl m = method_decl();
        if (!methods.insert(m.name).second) throw SyntaxError("duplicate method '" + m.name + "'", m.pos);
        p.methods.push_back(std::move(m));
      }
    }
    return p;
  }

 private:
  const Token& peek(int k = 0) const {
    const std::size_t j = std::min(pos_ + static_cast<std::size_t>(k), toks_.size() - 1);
    return toks_[j];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Tok::End; }
  bool is_punct(const char* s, int k = 0) const { return peek(k).kind == Tok::Punct && peek(k).text == s; }
  bool is_kw(const char* s, int k = 0) const { return peek(k).kind == Tok::Keyword && peek(k).text == s; }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    const std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(what + ", found " + found, t.pos);
  }

  void expect(const char* s) {
    if (!is_punct(s)) fail(std::string("expected '") + s + "'");
    next();
  }
  void expect_kw(const char* s) {
    if (!is_kw(s)) fail(std::string("expected '") + s + "'");
    next();
  }
  std::string ident() {
    if (peek().kind != Tok::Ident) fail("expected identifier");
    return next().text;
  }

  bool starts_type() const {
    const Token& t = peek();
    if (t.kind == Tok::Keyword)
      return t.text == "int" || t.text == "float" || t.text == "bool" || t.text == "Object" || t.text == "char";
    return t.kind == Tok::Ident && peek(1).kind == Tok::Ident;
  }

  Type type(bool allow_void = false) {
    const Token& t = peek();
    if (t.kind == Tok::Ident) {
      next();
      return Type::object(t.text);
    }
    if (t.kind != Tok::Keyword) fail("expected type");
    const std::string w = t.text;
    if (w == "void") {
      if (!allow_void) fail("'void' is only a return type");
      next();
      return Type::of(TypeKind::Void);
    }
    if (w == "Object") {
      next();
      return Type::object();
    }
    if (w == "bool") {
      next();
      return Type::of(TypeKind::Bool);
    }
    if (w == "int" || w == "float" || w == "char") {
      next();
      if (is_punct("[")) {
        next();
        expect("]");
        return Type::of(w == "int" ? TypeKind::IntArray : w == "float" ? TypeKind::FloatArray : TypeKind::CharArray);
      }
      if (w == "char") fail("expected '[' after 'char'");
      return Type::of(w == "int" ? TypeKind::Int : TypeKind::Float);
    }
    fail("expected type");
  }

  RecordDecl record_decl() {
    RecordDecl r;
    r.pos = peek().pos;
    expect_kw("record");
    r.name = ident();
    expect("{");
    std::set<std::string> seen;
    while (!is_punct("}")) {
      Param f;
      f.pos = peek().pos;
      f.type = type();
      f.name = ident();
      expect(";");
      if (!seen.insert(f.name).second) throw SyntaxError("duplicate field '" + f.name + "'", f.pos);
      r.fields.push_back(std::move(f));
    }
    next();
    return r;
  }

  MethodDecl method_decl() {
    MethodDecl m;
    m.pos = peek().pos;
    m.return_type = type(true);
    m.name = ident();
    expect("(");
    if (!is_punct(")")) {
      for (;;) {
        Param p;
        p.pos = peek().pos;
        p.type = type();
        p.name = ident();
        m.params.push_back(std::move(p));
        if (!is_punct(",")) break;
        next();
      }
    }
    expect(")");
    m.body = block();
    return m;
  }

  std::vector<Stmt> block() {
    expect("{");
    std::vector<Stmt> out;
    while (!is_punct("}")) {
      if (at_end()) fail("expected '}'");
      out.push_back(statement());
    }
    next();
    return out;
  }

  Stmt statement() {
    const SourcePos p = peek().pos;
    if (is_kw("if")) return if_stmt();
    if (is_kw("for")) return for_stmt();
    if (is_kw("while")) {
      next();
      Stmt s;
      s.kind = StmtKind::While;
      s.pos = p;
      expect("(");
      s.exprs.push_back(expr());
      expect(")");
      s.body = block();
      return s;
    }
    if (is_kw("switch")) return switch_stmt();
    if (is_kw("return")) {
      next();
      std::vector<Expr> v;
      if (!is_punct(";")) v.push_back(expr());
      expect(";");
      return Stmt::ret(std::move(v), p);
    }
    if (is_kw("break")) {
      next();
      expect(";");
      Stmt s;
      s.kind = StmtKind::Break;
      s.pos = p;
      return s;
    }
    Stmt s = simple_stmt();
    expect(";");
    return s;
  }

  // Declaration, assignment, increment/decrement or call; no trailing ';'.
  Stmt simple_stmt() {
    const SourcePos p = peek().pos;
    if (starts_type()) {
      Type t = type();
      std::string name = ident();
      std::vector<Expr> init;
      if (is_punct("=")) {
        next();
        init.push_back(expr());
      }
      return Stmt::var_decl(std::move(t), std::move(name), std::move(init), p);
    }
    if (is_punct("++") || is_punct("--")) {
      const bool inc = next().text == "++";
      Stmt s;
      s.kind = StmtKind::IncDec;
      s.pos = p;
      s.increment = inc;
      s.exprs.push_back(postfix());
      return s;
    }
    Expr target = postfix();
    if (is_punct("=")) {
      next();
      return Stmt::assign(std::move(target), expr(), p);
    }
    if (is_punct("++") || is_punct("--")) {
      Stmt s;
      s.kind = StmtKind::IncDec;
      s.pos = p;
      s.increment = next().text == "++";
      s.exprs.push_back(std::move(target));
      return s;
    }
    if (target.kind == ExprKind::Call) return Stmt::call_stmt(std::move(target), p);
    fail("expected statement");
  }

  Stmt if_stmt() {
    Stmt s;
    s.kind = StmtKind::If;
    s.pos = peek().pos;
    expect_kw("if");
    expect("(");
    s.exprs.push_back(expr());
    expect(")");
    s.body = block();
    if (is_kw("else")) {
      next();
      s.has_else = true;
      if (is_kw("if")) {
        s.else_body.push_back(if_stmt());
      } else {
        s.else_body = block();
      }
    }
    return s;
  }

  Stmt for_stmt() {
    Stmt s;
    s.kind = StmtKind::For;
    s.pos = peek().pos;
    expect_kw("for");
    expect("(");
    if (!is_punct(";")) s.init.push_back(simple_stmt());
    expect(";");
    if (is_punct(";")) fail("expected loop condition");
    s.exprs.push_back(expr());
    expect(";");
    if (!is_punct(")")) {
      Stmt u = simple_stmt();
      if (u.kind == StmtKind::VarDecl) throw SyntaxError("declaration in for update", u.pos);
      s.update.push_back(std::move(u));
    }
    expect(")");
    s.body = block();
    return s;
  }

  Stmt switch_stmt() {
    Stmt s;
    s.kind = StmtKind::Switch;
    s.pos = peek().pos;
    expect_kw("switch");
    expect("(");
    s.exprs.push_back(expr());
    expect(")");
    expect("{");
    std::set<std::int64_t> values;
    bool has_default = false;
    while (!is_punct("}")) {
      SwitchArm arm;
      arm.pos = peek().pos;
      if (is_kw("case")) {
        next();
        bool neg = false;
        if (is_punct("-")) {
          next();
          neg = true;
        }
        if (peek().kind != Tok::Int) fail("expected integer case label");
        arm.value = int_value(next(), neg);
        if (!values.insert(arm.value).second) throw SyntaxError("duplicate case label", arm.pos);
      } else if (is_kw("default")) {
        next();
        if (has_default) throw SyntaxError("duplicate default arm", arm.pos);
        has_default = true;
        arm.is_default = true;
      } else {
        fail("expected 'case' or 'default'");
      }
      expect(":");
      arm.body = block();
      s.arms.push_back(std::move(arm));
    }
    next();
    return s;
  }

  static std::int64_t int_value(const Token& t, bool negative) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    const std::uint64_t limit = negative ? (1ULL << 63) : (1ULL << 63) - 1;
    if (ec != std::errc() || ptr != t.text.data() + t.text.size() || v > limit)
      throw SyntaxError("integer literal out of range", t.pos);
    return negative ? static_cast<std::int64_t>(0 - v) : static_cast<std::int64_t>(v);
  }

  static double float_value(const Token& t, bool negative) {
    const double v = std::strtod(t.text.c_str(), nullptr);
    if (!std::isfinite(v)) throw SyntaxError("float literal out of range", t.pos);
    return negative ? -v : v;
  }

  Expr expr(int min_prec = 1) {
    Expr lhs = unary();
    for (;;) {
      const auto op = binary_op(peek());
      if (!op || precedence(*op) < min_prec) return lhs;
      const SourcePos p = next().pos;
      Expr rhs = expr(precedence(*op) + 1);
      lhs = Expr::binary(*op, std::move(lhs), std::move(rhs), p);
    }
  }

  Expr unary() {
    const SourcePos p = peek().pos;
    if (is_punct("-")) {
      next();
      if (peek().kind == Tok::Int) return Expr::int_lit(int_value(next(), true), p);
      if (peek().kind == Tok::Float) return Expr::float_lit(float_value(next(), true), p);
      return Expr::unary(UnaryOp::Neg, unary(), p);
    }
    if (is_punct("!")) {
      next();
      return Expr::unary(UnaryOp::Not, unary(), p);
    }
    if (is_punct("(") && (is_kw("int", 1) || is_kw("float", 1)) && is_punct(")", 2)) {
      next();
      Expr e;
      e.kind = ExprKind::Cast;
      e.pos = p;
      e.target = Type::of(next().text == "int" ? TypeKind::Int : TypeKind::Float);
      next();
      e.operands.push_back(unary());
      return e;
    }
    return postfix();
  }

  Expr postfix() {
    Expr e = primary();
    for (;;) {
      const SourcePos p = peek().pos;
      if (is_punct(".")) {
        next();
        e = Expr::field(std::move(e), ident(), p);
      } else if (is_punct("[")) {
        next();
        Expr idx = expr();
        expect("]");
        e = Expr::index(std::move(e), std::move(idx), p);
      } else {
        return e;
      }
    }
  }

  Expr primary() {
    const Token& t = peek();
    const SourcePos p = t.pos;
    switch (t.kind) {
      case Tok::Int: return Expr::int_lit(int_value(next(), false), p);
      case Tok::Float: return Expr::float_lit(float_value(next(), false), p);
      case Tok::Ident: {
        std::string name = next().text;
        if (!is_punct("(")) return Expr::var(std::move(name), p);
        next();
        std::vector<Expr> args;
        if (!is_punct(")")) {
          for (;;) {
            args.push_back(expr());
            if (!is_punct(",")) break;
            next();
          }
        }
        expect(")");
        return Expr::call(std::move(name), std::move(args), p);
      }
      case Tok::Keyword:
        if (t.text == "true" || t.text == "false") return Expr::bool_lit(next().text == "true", p);
        if (t.text == "null") {
          next();
          return Expr::null_lit(p);
        }
        if (t.text == "new") return new_expr();
        break;
      case Tok::Punct:
        if (t.text == "(") {
          next();
          Expr e = expr();
          expect(")");
          return e;
        }
        break;
      case Tok::End: break;
    }
    fail("expected expression");
  }

  Expr new_expr() {
    Expr e;
    e.pos = peek().pos;
    expect_kw("new");
    if (peek().kind == Tok::Ident) {
      e.kind = ExprKind::NewRecord;
      e.name = next().text;
      e.target = Type::object(e.name);
      expect("(");
      expect(")");
      return e;
    }
    TypeKind k;
    if (is_kw("int")) {
      k = TypeKind::IntArray;
    } else if (is_kw("float")) {
      k = TypeKind::FloatArray;
    } else if (is_kw("char")) {
      k = TypeKind::CharArray;
    } else {
      fail("expected record name or array element type after 'new'");
    }
    next();
    e.kind = ExprKind::NewArray;
    e.target = Type::of(k);
    expect("[");
    e.operands.push_back(expr());
    expect("]");
    return e;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// Shortest decimal form that parses back to the same double, always with a
// '.' or exponent so it lexes as a float.
std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

int expr_prec(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Binary: return precedence(e.binary_op);
    case ExprKind::Unary:
    case ExprKind::Cast: return kUnaryPrec;
    case ExprKind::IntLit: return e.int_value < 0 ? kUnaryPrec : kPrimaryPrec;
    case ExprKind::FloatLit: return std::signbit(e.float_value) ? kUnaryPrec : kPrimaryPrec;
    case ExprKind::Field:
    case ExprKind::Index: return kPostfixPrec;
    default: return kPrimaryPrec;
  }
}

void print_expr(std::string& out, const Expr& e, int min_prec);

void print_operand(std::string& out, const Expr& e, int min_prec) {
  const bool paren = expr_prec(e) < min_prec;
  if (paren) out += '(';
  print_expr(out, e, 0);
  if (paren) out += ')';
}

void print_expr(std::string& out, const Expr& e, int min_prec) {
  if (expr_prec(e) < min_prec) {
    print_operand(out, e, min_prec);
    return;
  }
  switch (e.kind) {
    case ExprKind::IntLit:
      out += std::to_string(e.int_value);
      break;
    case ExprKind::FloatLit:
      out += format_double(e.float_value);
      break;
    case ExprKind::BoolLit:
      out += e.bool_value ? "true" : "false";
      break;
    case ExprKind::NullLit:
      out += "null";
      break;
    case ExprKind::Var:
      out += e.name;
      break;
    case ExprKind::Field:
      print_operand(out, e.operands[0], kPostfixPrec);
      out += '.';
      out += e.name;
      break;
    case ExprKind::Index:
      print_operand(out, e.operands[0], kPostfixPrec);
      out += '[';
      print_expr(out, e.operands[1], 0);
      out += ']';
      break;
    case ExprKind::Unary: {
      out += to_string(e.unary_op);
      const Expr& x = e.operands[0];
      // A literal right after '-' would fold into a negative literal, and a
      // nested unary would lex as '--'.
      const bool literal = x.kind == ExprKind::IntLit || x.kind == ExprKind::FloatLit;
      if (literal || x.kind == ExprKind::Unary) {
        out += '(';
        print_expr(out, x, 0);
        out += ')';
      } else {
        print_operand(out, x, kPostfixPrec);
      }
      break;
    }
    case ExprKind::Cast:
      out += '(';
      out += signature(e.target);
      out += ") ";
      print_operand(out, e.operands[0], kUnaryPrec);
      break;
    case ExprKind::Binary: {
      const int p = precedence(e.binary_op);
      print_operand(out, e.operands[0], p);
      out += ' ';
      out += to_string(e.binary_op);
      out += ' ';
      print_operand(out, e.operands[1], p + 1);
      break;
    }
    case ExprKind::Call:
      out += e.name;
      out += '(';
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i) out += ", ";
        print_expr(out, e.operands[i], 0);
      }
      out += ')';
      break;
    case ExprKind::NewRecord:
      out += "new " + e.name + "()";
      break;
    case ExprKind::NewArray: {
      std::string elem = signature(e.target);
      elem.resize(elem.size() - 2);
      out += "new " + elem + "[";
      print_expr(out, e.operands[0], 0);
      out += ']';
      break;
    }
  }
}

void print_block(std::string& out, const std::vector<Stmt>& body, int indent);

void print_simple(std::string& out, const Stmt& s) {
  switch (s.kind) {
    case StmtKind::VarDecl:
      out += spelling(s.decl_type) + " " + s.name;
      if (!s.exprs.empty()) {
        out += " = ";
        print_expr(out, s.exprs[0], 0);
      }
      break;
    case StmtKind::Assign:
      print_expr(out, s.exprs[0], 0);
      out += " = ";
      print_expr(out, s.exprs[1], 0);
      break;
    case StmtKind::IncDec:
      print_expr(out, s.exprs[0], 0);
      out += s.increment ? "++" : "--";
      break;
    case StmtKind::Call:
      print_expr(out, s.exprs[0], 0);
      break;
    default:
      break;
  }
}

void print_stmt(std::string& out, const Stmt& s, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  out += pad;
  switch (s.kind) {
    case StmtKind::If: {
      const Stmt* cur = &s;
      for (;;) {
        out += "if (";
        print_expr(out, cur->exprs[0], 0);
        out += ") ";
        print_block(out, cur->body, indent);
        if (!cur->has_else) break;
        out += " else ";
        const auto& eb = cur->else_body;
        // Keep "else if" chains flat; only a lone nested if is re-sugared.
        if (eb.size() == 1 && eb[0].kind == StmtKind::If) {
          cur = &eb[0];
          continue;
        }
        print_block(out, eb, indent);
        break;
      }
      out += '\n';
      return;
    }
    case StmtKind::For:
      out += "for (";
      if (!s.init.empty()) print_simple(out, s.init[0]);
      out += "; ";
      print_expr(out, s.exprs[0], 0);
      out += ";";
      if (!s.update.empty()) {
        out += ' ';
        print_simple(out, s.update[0]);
      }
      out += ") ";
      print_block(out, s.body, indent);
      out += '\n';
      return;
    case StmtKind::While:
      out += "while (";
      print_expr(out, s.exprs[0], 0);
      out += ") ";
      print_block(out, s.body, indent);
      out += '\n';
      return;
    case StmtKind::Switch:
      out += "switch (";
      print_expr(out, s.exprs[0], 0);
      out += ") {\n";
      for (const auto& arm : s.arms) {
        out += pad + "  ";
        out += arm.is_default ? std::string("default") : "case " + std::to_string(arm.value);
        out += ": ";
        print_block(out, arm.body, indent + 1);
        out += '\n';
      }
      out += pad + "}\n";
      return;
    case StmtKind::Return:
      out += "return";
      if (!s.exprs.empty()) {
        out += ' ';
        print_expr(out, s.exprs[0], 0);
      }
      out += ";\n";
      return;
    case StmtKind::Break:
      out += "break;\n";
      return;
    default:
      print_simple(out, s);
      out += ";\n";
      return;
  }
}

void print_block(std::string& out, const std::vector<Stmt>& body, int indent) {
  if (body.empty()) {
    out += "{}";
    return;
  }
  out += "{\n";
  for (const auto& s : body) print_stmt(out, s, indent + 1);
  out += std::string(static_cast<std::size_t>(indent) * 2, ' ') + "}";
}

}  // namespace

Program parse_source(std::string_view text) { return Parser(Lexer(text).run()).program(); }

std::string pretty_print(const Expr& expr) {
  std::string out;
  print_expr(out, expr, 0);
  return out;
}

std::string pretty_print(const std::vector<Stmt>& stmts, int indent) {
  std::string out;
  for (const auto& s : stmts) print_stmt(out, s, indent);
  return out;
}

std::string pretty_print(const Program& program) {
  std::string out;
  for (const auto& r : program.records) {
    out += "record " + r.name + " {";
    if (r.fields.empty()) {
      out += "}\n\n";
      continue;
    }
    out += '\n';
    for (const auto& f : r.fields) out += "  " + spelling(f.type) + " " + f.name + ";\n";
    out += "}\n\n";
  }
  for (const auto& g : program.globals) out += "global " + spelling(g.type) + " " + g.name + ";\n";
  if (!program.globals.empty()) out += '\n';
  for (std::size_t i = 0; i < program.methods.size(); ++i) {
    const auto& m = program.methods[i];
    if (i) out += '\n';
    out += spelling(m.return_type) + " " + m.name + "(";
    for (std::size_t k = 0; k < m.params.size(); ++k) {
      if (k) out += ", ";
      out += spelling(m.params[k].type) + " " + m.params[k].name;
    }
    out += ") ";
    print_block(out, m.body, 0);
    out += '\n';
  }
  return out;
}

}  // namespace enerlyze::lang

#include "ivla/program.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

#include "ivla/error.hpp"

namespace ivla {

bool Program::is_input(const std::string& name) const {
  return find_input(name) != nullptr;
}

const InputDecl* Program::find_input(const std::string& name) const {
  for (const auto& in : inputs) {
    if (in.name == name) return &in;
  }
  return nullptr;
}

const Statement* Program::find_statement(const std::string& target) const {
  for (const auto& s : statements) {
    if (s.target == target) return &s;
  }
  return nullptr;
}

std::vector<std::string> Program::input_names() const {
  std::vector<std::string> names;
  for (const auto& in : inputs) names.push_back(in.name);
  return names;
}

namespace {

enum class Tok {
  Ident,
  Number,
  Assign,
  Colon,
  Semi,
  Comma,
  Plus,
  Minus,
  Star,
  Quote,
  LParen,
  RParen,
  End
};

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= src_.size()) {
        out.push_back({Tok::End, "", line_, col_});
        return out;
      }
      const int line = line_, col = col_;
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_')) {
          advance();
        }
        out.push_back(
            {Tok::Ident, std::string(src_.substr(start, pos_ - start)), line, col});
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E' ||
                ((src_[pos_] == '-' || src_[pos_] == '+') &&
                 (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E')))) {
          advance();
        }
        out.push_back(
            {Tok::Number, std::string(src_.substr(start, pos_ - start)), line, col});
      } else if (c == ':' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
        advance();
        advance();
        out.push_back({Tok::Assign, ":=", line, col});
      } else {
        Tok kind;
        switch (c) {
          case ':': kind = Tok::Colon; break;
          case ';': kind = Tok::Semi; break;
          case ',': kind = Tok::Comma; break;
          case '+': kind = Tok::Plus; break;
          case '-': kind = Tok::Minus; break;
          case '*': kind = Tok::Star; break;
          case '\'': kind = Tok::Quote; break;
          case '(': kind = Tok::LParen; break;
          case ')': kind = Tok::RParen; break;
          default:
            throw ParseError(std::string("unexpected character '") + c + "'",
                             line, col);
        }
        advance();
        out.push_back({kind, std::string(1, c), line, col});
      }
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// A parsed operand is either a scalar literal or a matrix expression; scalars
// only ever appear as factors of a product.
using Operand = std::variant<double, Expr>;

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program run() {
    Program p;
    while (peek().kind != Tok::End) {
      const Token& t = peek();
      if (t.kind == Tok::Ident && t.text == "input") {
        parse_input(p);
      } else if (t.kind == Tok::Ident && t.text == "output") {
        parse_output(p);
      } else if (t.kind == Tok::Ident) {
        parse_statement(p);
      } else {
        fail(t, "expected 'input', 'output' or a statement");
      }
    }
    for (const auto& out : p.outputs) {
      if (!p.find_statement(out) && !p.is_input(out)) {
        throw ParseError("output '" + out + "' is never defined", 1, 1);
      }
    }
    return p;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const Token& t, const std::string& what) const {
    throw ParseError(what + (t.kind == Tok::End ? " at end of input"
                                                : " near '" + t.text + "'"),
                     t.line, t.column);
  }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(peek(), std::string("expected ") + what);
    return next();
  }

  bool is_reserved(const std::string& s) const {
    return s == "input" || s == "output" || s == "inv";
  }

  const Token& expect_name(const char* what) {
    const Token& t = expect(Tok::Ident, what);
    if (is_reserved(t.text)) fail(t, std::string("expected ") + what);
    return t;
  }

  std::string parse_dim() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      std::size_t v = 0;
      auto [end, ec] =
          std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc() || end != t.text.data() + t.text.size() || v == 0) {
        fail(t, "dimension literal must be a positive integer");
      }
      next();
      return std::to_string(v);
    }
    return expect_name("dimension").text;
  }

  void parse_input(Program& p) {
    next();  // input
    const Token& name = expect_name("input name");
    declare(name);
    expect(Tok::Colon, "':'");
    InputDecl decl{name.text, parse_dim(), ""};
    const Token& x = expect(Tok::Ident, "'x'");
    if (x.text != "x") fail(x, "expected 'x' between dimensions");
    decl.cols = parse_dim();
    expect(Tok::Semi, "';'");
    p.inputs.push_back(std::move(decl));
  }

  void parse_output(Program& p) {
    next();  // output
    do {
      p.outputs.push_back(expect_name("output name").text);
    } while (peek().kind == Tok::Comma && (next(), true));
    expect(Tok::Semi, "';'");
  }

  void declare(const Token& name) {
    if (!defined_.insert(name.text).second) {
      throw ParseError("'" + name.text + "' is already defined", name.line,
                       name.column);
    }
  }

  void parse_statement(Program& p) {
    const Token& target = expect_name("statement target");
    expect(Tok::Assign, "':='");
    Expr e = as_matrix(parse_sum(), target);
    expect(Tok::Semi, "';'");
    declare(target);
    p.statements.push_back({target.text, std::move(e)});
  }

  Expr as_matrix(const Operand& op, const Token& at) {
    if (const Expr* e = std::get_if<Expr>(&op)) return *e;
    fail(at, "scalar used where a matrix is required");
  }

  Operand parse_sum() {
    const Token& start = peek();
    Operand acc = parse_product();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Token& op = next();
      Expr lhs = as_matrix(acc, start);
      Expr rhs = as_matrix(parse_product(), op);
      acc = op.kind == Tok::Plus ? add(lhs, rhs) : sub(lhs, rhs);
    }
    return acc;
  }

  Operand parse_product() {
    Operand acc = parse_unary();
    while (peek().kind == Tok::Star) {
      const Token& op = next();
      Operand rhs = parse_unary();
      const double* ls = std::get_if<double>(&acc);
      const double* rs = std::get_if<double>(&rhs);
      if (ls && rs) {
        acc = *ls * *rs;
      } else if (ls) {
        acc = scale(*ls, std::get<Expr>(rhs));
      } else if (rs) {
        acc = scale(*rs, std::get<Expr>(acc));
      } else {
        acc = mul(std::get<Expr>(acc), std::get<Expr>(rhs));
      }
      (void)op;
    }
    return acc;
  }

  Operand parse_unary() {
    if (peek().kind == Tok::Minus) {
      const Token& minus = next();
      if (peek().kind == Tok::Number) return -parse_number();
      Operand inner = parse_unary();
      return scale(-1.0, as_matrix(inner, minus));
    }
    return parse_postfix();
  }

  double parse_number() {
    const Token& t = next();
    double v = 0.0;
    auto [end, ec] =
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || end != t.text.data() + t.text.size()) {
      fail(t, "malformed number");
    }
    return v;
  }

  Operand parse_postfix() {
    const Token& start = peek();
    Operand base = parse_primary();
    while (peek().kind == Tok::Quote) {
      next();
      base = transpose(as_matrix(base, start));
    }
    return base;
  }

  Operand parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        return parse_number();
      case Tok::LParen: {
        next();
        Operand inner = parse_sum();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident: {
        if (t.text == "inv") {
          next();
          expect(Tok::LParen, "'('");
          Expr arg = as_matrix(parse_sum(), t);
          expect(Tok::RParen, "')'");
          return inverse(arg);
        }
        if (is_reserved(t.text)) fail(t, "unexpected keyword");
        next();
        if (!defined_.contains(t.text)) {
          throw ParseError("'" + t.text + "' is used before it is defined",
                           t.line, t.column);
        }
        return var(t.text);
      }
      default:
        fail(t, "expected an expression");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string> defined_;
};

}  // namespace

Program parse_program(std::string_view text) {
  Program p = Parser(Lexer(text).run()).run();
  symbolic_shapes(p);
  return p;
}

Program load_program(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open program file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str());
}

std::string to_string(const Program& p) {
  std::string out;
  for (const auto& in : p.inputs) {
    out += "input " + in.name + ":" + in.rows + " x " + in.cols + ";\n";
  }
  for (const auto& s : p.statements) {
    out += s.target + " := " + to_string(s.expr) + ";\n";
  }
  if (!p.outputs.empty()) {
    out += "output ";
    for (std::size_t i = 0; i < p.outputs.size(); ++i) {
      if (i) out += ", ";
      out += p.outputs[i];
    }
    out += ";\n";
  }
  return out;
}

bool structurally_equal(const Program& a, const Program& b) {
  if (a.inputs.size() != b.inputs.size() ||
      a.statements.size() != b.statements.size() || a.outputs != b.outputs) {
    return false;
  }
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    const auto &x = a.inputs[i], &y = b.inputs[i];
    if (x.name != y.name || x.rows != y.rows || x.cols != y.cols) return false;
  }
  for (std::size_t i = 0; i < a.statements.size(); ++i) {
    if (a.statements[i].target != b.statements[i].target ||
        !structurally_equal(a.statements[i].expr, b.statements[i].expr)) {
      return false;
    }
  }
  return true;
}

SymbolicShapeMap symbolic_shapes(const Program& p) {
  SymbolicShapeMap shapes;
  for (const auto& in : p.inputs) shapes[in.name] = {in.rows, in.cols};
  for (const auto& s : p.statements) {
    try {
      shapes[s.target] = infer_shape(s.expr, shapes);
    } catch (const ShapeError& e) {
      throw ShapeError("statement '" + s.target + "': " + e.what());
    }
  }
  return shapes;
}

std::size_t resolve_dim(const std::string& dim, const DimBindings& dims) {
  if (!dim.empty() && std::isdigit(static_cast<unsigned char>(dim[0]))) {
    return std::stoul(dim);
  }
  auto it = dims.find(dim);
  if (it == dims.end()) {
    throw ConfigError("unbound dimension '" + dim + "'");
  }
  if (it->second == 0) {
    throw ConfigError("dimension '" + dim + "' must be positive");
  }
  return it->second;
}

ShapeMap shape_check(const Program& p, const DimBindings& dims) {
  ShapeMap shapes;
  for (const auto& in : p.inputs) {
    shapes[in.name] = {resolve_dim(in.rows, dims), resolve_dim(in.cols, dims)};
  }
  for (const auto& s : p.statements) {
    try {
      shapes[s.target] = infer_shape(s.expr, shapes);
    } catch (const ShapeError& e) {
      throw ShapeError("statement '" + s.target + "': " + e.what());
    }
  }
  return shapes;
}

}  // namespace ivla

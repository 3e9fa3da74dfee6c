#include "softrestrict/restriction.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

namespace softrestrict {

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

struct RestrictionExpr::Node {
  enum class Kind { Constant, Param, Neg, Add, Sub, Mul, Pow };
  Kind kind;
  double constant = 0.0; // Constant
  int index = 0;         // Param
  int exponent = 0;      // Pow
  NodePtr lhs, rhs;      // children (rhs only for binary ops)
};

namespace {

using Node = RestrictionExpr::Node;
using NodePtr = RestrictionExpr::NodePtr;
using Kind = Node::Kind;

NodePtr make_constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->constant = v;
  return n;
}

NodePtr make_param(int index) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Param;
  n->index = index;
  return n;
}

NodePtr make_unary(Kind kind, NodePtr child) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(child);
  return n;
}

NodePtr make_binary(Kind kind, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_pow(NodePtr base, int exponent) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Pow;
  n->exponent = exponent;
  n->lhs = std::move(base);
  return n;
}

// Value, gradient and Hessian of a subexpression at a point.
struct Trip {
  double v = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
};

Trip eval_node(const Node& node, const Eigen::VectorXd& theta, bool want_grad,
               bool want_hess) {
  const auto dim = theta.size();
  Trip out;
  if (want_grad) out.g = Eigen::VectorXd::Zero(dim);
  if (want_hess) out.h = Eigen::MatrixXd::Zero(dim, dim);
  switch (node.kind) {
    case Kind::Constant:
      out.v = node.constant;
      return out;
    case Kind::Param:
      out.v = theta[node.index];
      if (want_grad) out.g[node.index] = 1.0;
      return out;
    case Kind::Neg: {
      Trip a = eval_node(*node.lhs, theta, want_grad, want_hess);
      out.v = -a.v;
      if (want_grad) out.g = -a.g;
      if (want_hess) out.h = -a.h;
      return out;
    }
    case Kind::Add:
    case Kind::Sub: {
      Trip a = eval_node(*node.lhs, theta, want_grad, want_hess);
      Trip b = eval_node(*node.rhs, theta, want_grad, want_hess);
      const double s = node.kind == Kind::Add ? 1.0 : -1.0;
      out.v = a.v + s * b.v;
      if (want_grad) out.g = a.g + s * b.g;
      if (want_hess) out.h = a.h + s * b.h;
      return out;
    }
    case Kind::Mul: {
      // Hessian of a product needs both gradients.
      Trip a = eval_node(*node.lhs, theta, want_grad || want_hess, want_hess);
      Trip b = eval_node(*node.rhs, theta, want_grad || want_hess, want_hess);
      out.v = a.v * b.v;
      if (want_grad) out.g = a.v * b.g + b.v * a.g;
      if (want_hess)
        out.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
      return out;
    }
    case Kind::Pow: {
      const int k = node.exponent;
      if (k == 0) {
        out.v = 1.0;
        return out;
      }
      Trip a = eval_node(*node.lhs, theta, want_grad || want_hess, want_hess);
      const double fk1 = std::pow(a.v, k - 1);
      out.v = fk1 * a.v;
      if (want_grad) out.g = k * fk1 * a.g;
      if (want_hess) {
        const double fk2 = (k >= 2) ? std::pow(a.v, k - 2) : 0.0;
        out.h = k * fk1 * a.h + k * (k - 1) * fk2 * a.g * a.g.transpose();
      }
      return out;
    }
  }
  return out; // unreachable
}

int node_degree(const Node& node) {
  switch (node.kind) {
    case Kind::Constant: return 0;
    case Kind::Param: return 1;
    case Kind::Neg: return node_degree(*node.lhs);
    case Kind::Add:
    case Kind::Sub: return std::max(node_degree(*node.lhs), node_degree(*node.rhs));
    case Kind::Mul: return node_degree(*node.lhs) + node_degree(*node.rhs);
    case Kind::Pow: return node_degree(*node.lhs) * node.exponent;
  }
  return 0;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void print_node(const Node& node, std::string& out) {
  switch (node.kind) {
    case Kind::Constant:
      out += format_double(node.constant);
      return;
    case Kind::Param:
      out += "theta[";
      out += std::to_string(node.index);
      out += ']';
      return;
    case Kind::Neg:
      out += "-(";
      print_node(*node.lhs, out);
      out += ')';
      return;
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul: {
      const char op = node.kind == Kind::Add ? '+' : node.kind == Kind::Sub ? '-' : '*';
      out += '(';
      print_node(*node.lhs, out);
      out += op;
      print_node(*node.rhs, out);
      out += ')';
      return;
    }
    case Kind::Pow:
      out += '(';
      print_node(*node.lhs, out);
      out += ")^";
      out += std::to_string(node.exponent);
      return;
  }
}

// ---------------------------------------------------------------------------
// Recursive-descent parser
// ---------------------------------------------------------------------------

class Parser {
public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  NodePtr parse_input() {
    NodePtr lhs = parse_expr();
    skip_ws();
    if (!done() && peek() == '=') {
      ++pos_;
      NodePtr rhs = parse_expr();
      lhs = make_binary(Kind::Sub, std::move(lhs), std::move(rhs));
    }
    skip_ws();
    if (!done()) fail("unexpected trailing input");
    return lhs;
  }

private:
  NodePtr parse_expr() {
    NodePtr node = parse_term();
    for (;;) {
      skip_ws();
      if (done()) return node;
      const char c = peek();
      if (c != '+' && c != '-') return node;
      ++pos_;
      NodePtr rhs = parse_term();
      node = make_binary(c == '+' ? Kind::Add : Kind::Sub, std::move(node), std::move(rhs));
    }
  }

  NodePtr parse_term() {
    NodePtr node = parse_factor();
    for (;;) {
      skip_ws();
      if (done() || peek() != '*') return node;
      ++pos_;
      NodePtr rhs = parse_factor();
      node = make_binary(Kind::Mul, std::move(node), std::move(rhs));
    }
  }

  NodePtr parse_factor() {
    skip_ws();
    bool negate = false;
    if (!done() && peek() == '-') {
      negate = true;
      ++pos_;
    }
    NodePtr node = parse_atom();
    skip_ws();
    if (!done() && peek() == '^') {
      ++pos_;
      node = make_pow(std::move(node), parse_exponent());
    }
    return negate ? make_unary(Kind::Neg, std::move(node)) : node;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (done()) fail("expected a number, theta[...] or parenthesized expression");
    const char c = peek();
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      skip_ws();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    if (text_.compare(pos_, 5, "theta") == 0) return parse_param();
    fail("expected a number, theta[...] or parenthesized expression");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (!done() && peek() == '.') {
      ++pos_;
      while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (!done() && (peek() == 'e' || peek() == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (!done() && (peek() == '+' || peek() == '-')) ++pos_;
      if (done() || !std::isdigit(static_cast<unsigned char>(peek()))) {
        pos_ = mark; // not an exponent suffix after all
      } else {
        while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      }
    }
    double value = 0.0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc{}) fail_at("malformed numeric literal", start);
    return make_constant(value);
  }

  NodePtr parse_param() {
    const std::size_t start = pos_;
    pos_ += 5; // "theta"
    skip_ws();
    expect('[');
    skip_ws();
    const std::size_t idx_start = pos_;
    while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (pos_ == idx_start) fail("expected a parameter index");
    int index = 0;
    const auto res = std::from_chars(text_.data() + idx_start, text_.data() + pos_, index);
    if (res.ec != std::errc{}) fail_at("malformed parameter index", idx_start);
    skip_ws();
    expect(']');
    if (index >= dim_)
      fail_at("parameter index " + std::to_string(index) + " out of range for dimension " +
                  std::to_string(dim_),
              start);
    return make_param(index);
  }

  int parse_exponent() {
    skip_ws();
    const std::size_t start = pos_;
    if (!done() && (peek() == '-' || peek() == '+'))
      fail("exponent must be a non-negative integer");
    while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (pos_ == start) fail("exponent must be a non-negative integer");
    if (!done() && peek() == '.') fail("exponent must be a non-negative integer");
    int k = 0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, k);
    if (res.ec != std::errc{}) fail_at("malformed exponent", start);
    return k;
  }

  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  void expect(char c) {
    if (done() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& message) const { fail_at(message, pos_); }
  [[noreturn]] void fail_at(const std::string& message, std::size_t position) const {
    throw ParseError(message, position);
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

} // namespace

RestrictionExpr RestrictionExpr::parse(std::string_view text, int dim) {
  if (dim <= 0) throw std::invalid_argument("RestrictionExpr::parse: dimension must be positive");
  Parser parser(text, dim);
  return RestrictionExpr(parser.parse_input(), dim);
}

int RestrictionExpr::degree() const { return root_ ? node_degree(*root_) : 0; }

double RestrictionExpr::value(const Eigen::VectorXd& theta) const {
  double v = 0.0;
  eval(theta, &v, nullptr, nullptr);
  return v;
}

Eigen::VectorXd RestrictionExpr::gradient(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd g;
  eval(theta, nullptr, &g, nullptr);
  return g;
}

Eigen::MatrixXd RestrictionExpr::hessian(const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd h;
  eval(theta, nullptr, nullptr, &h);
  return h;
}

void RestrictionExpr::eval(const Eigen::VectorXd& theta, double* value,
                           Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
  if (!root_) throw std::logic_error("RestrictionExpr: evaluating an empty expression");
  if (theta.size() != dim_)
    throw std::invalid_argument("RestrictionExpr: theta has dimension " +
                                std::to_string(theta.size()) + ", expected " +
                                std::to_string(dim_));
  const Trip t = eval_node(*root_, theta, grad != nullptr, hess != nullptr);
  if (value) *value = t.v;
  if (grad) *grad = t.g;
  if (hess) *hess = t.h;
}

std::string RestrictionExpr::to_string() const {
  std::string out;
  if (root_) print_node(*root_, out);
  return out;
}

// ---------------------------------------------------------------------------
// RestrictionSystem
// ---------------------------------------------------------------------------

RestrictionSystem::RestrictionSystem(std::vector<RestrictionExpr> exprs,
                                     Eigen::MatrixXd sigma,
                                     std::vector<std::string> labels)
    : exprs_(std::move(exprs)), sigma_(std::move(sigma)), labels_(std::move(labels)) {
  if (exprs_.empty()) throw std::invalid_argument("RestrictionSystem: needs q >= 1 restrictions");
  dim_ = exprs_.front().dim();
  for (const auto& e : exprs_)
    if (e.dim() != dim_)
      throw std::invalid_argument("RestrictionSystem: restrictions bound to different dimensions");
  const int q = this->q();
  if (sigma_.rows() != q || sigma_.cols() != q)
    throw std::invalid_argument("RestrictionSystem: sigma must be q x q");
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("RestrictionSystem: sigma is not symmetric");
  sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
  sigma_llt_.compute(sigma_);
  if (sigma_llt_.info() != Eigen::Success)
    throw std::invalid_argument("RestrictionSystem: sigma is not positive definite");
  if (labels_.empty()) {
    labels_.reserve(static_cast<std::size_t>(q));
    for (const auto& e : exprs_) labels_.push_back(e.to_string());
  }
  if (static_cast<int>(labels_.size()) != q)
    throw std::invalid_argument("RestrictionSystem: label count differs from q");

  linear_ = true;
  for (const auto& e : exprs_)
    if (!e.linear()) { linear_ = false; break; }
  if (linear_) {
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(dim_);
    linear_jacobian_.resize(q, dim_);
    linear_offset_.resize(q);
    for (int j = 0; j < q; ++j) {
      linear_jacobian_.row(j) = exprs_[static_cast<std::size_t>(j)].gradient(origin).transpose();
      linear_offset_[j] = exprs_[static_cast<std::size_t>(j)].value(origin);
    }
    h_hess_linear_ = 2.0 * linear_jacobian_.transpose() * sigma_solve(linear_jacobian_);
  }
}

RestrictionSystem RestrictionSystem::with_identity_sigma(std::vector<RestrictionExpr> exprs,
                                                         std::vector<std::string> labels) {
  const int q = static_cast<int>(exprs.size());
  return RestrictionSystem(std::move(exprs), Eigen::MatrixXd::Identity(q, q),
                           std::move(labels));
}

const Eigen::MatrixXd& RestrictionSystem::linear_jacobian() const {
  if (!linear_) throw std::logic_error("RestrictionSystem: system is not linear");
  return linear_jacobian_;
}

const Eigen::VectorXd& RestrictionSystem::linear_offset() const {
  if (!linear_) throw std::logic_error("RestrictionSystem: system is not linear");
  return linear_offset_;
}

void RestrictionSystem::check_theta(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim_)
    throw std::invalid_argument("RestrictionSystem: theta has dimension " +
                                std::to_string(theta.size()) + ", expected " +
                                std::to_string(dim_));
}

Eigen::VectorXd RestrictionSystem::eval_g(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  if (linear_) return linear_jacobian_ * theta + linear_offset_;
  Eigen::VectorXd g(q());
  for (int j = 0; j < q(); ++j) g[j] = exprs_[static_cast<std::size_t>(j)].value(theta);
  return g;
}

Eigen::MatrixXd RestrictionSystem::eval_G(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  if (linear_) return linear_jacobian_;
  Eigen::MatrixXd G(q(), p());
  for (int j = 0; j < q(); ++j)
    G.row(j) = exprs_[static_cast<std::size_t>(j)].gradient(theta).transpose();
  return G;
}

double RestrictionSystem::eval_h(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd g = eval_g(theta);
  return g.dot(sigma_llt_.solve(g));
}

Eigen::VectorXd RestrictionSystem::eval_h_grad(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd g = eval_g(theta);
  const Eigen::VectorXd w = sigma_llt_.solve(g);
  if (linear_) return 2.0 * linear_jacobian_.transpose() * w;
  return 2.0 * eval_G(theta).transpose() * w;
}

Eigen::MatrixXd RestrictionSystem::eval_h_hess(const Eigen::VectorXd& theta) const {
  if (linear_) {
    check_theta(theta);
    return h_hess_linear_;
  }
  const Eigen::VectorXd g = eval_g(theta);
  const Eigen::VectorXd w = sigma_llt_.solve(g);
  const Eigen::MatrixXd G = eval_G(theta);
  Eigen::MatrixXd hess = 2.0 * G.transpose() * sigma_llt_.solve(G);
  for (int j = 0; j < q(); ++j)
    if (w[j] != 0.0) hess += 2.0 * w[j] * exprs_[static_cast<std::size_t>(j)].hessian(theta);
  return hess;
}

Eigen::MatrixXd RestrictionSystem::sigma_solve(const Eigen::MatrixXd& rhs) const {
  return sigma_llt_.solve(rhs);
}

} // namespace softrestrict

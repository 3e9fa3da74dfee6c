#pragma once

#include <Eigen/Core>
#include <Eigen/Cholesky>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace softrestrict {

/// Parse failure with the 0-based offset into the input text.
class ParseError : public std::invalid_argument {
public:
  ParseError(const std::string& message, std::size_t position)
      : std::invalid_argument(message + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

/// A single restriction expression g_j(theta): a polynomial AST over
/// parameter references theta[k], constants, +, -, *, unary minus and
/// non-negative integer powers. An optional '=' in the source splits the
/// text into lhs - rhs. Immutable after parsing; evaluation is pure.
class RestrictionExpr {
public:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  RestrictionExpr() = default;

  /// Parse `text` against parameter dimension `dim`. Grammar (EBNF):
  ///   input  := expr ( '=' expr )?
  ///   expr   := term  (('+'|'-') term)*
  ///   term   := factor ('*' factor)*
  ///   factor := ('-')? atom ('^' INT)?
  ///   atom   := NUMBER | 'theta[' INT ']' | '(' expr ')'
  static RestrictionExpr parse(std::string_view text, int dim);

  int dim() const { return dim_; }
  /// Total polynomial degree of the expression.
  int degree() const;
  bool linear() const { return degree() <= 1; }

  double value(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const;
  /// Evaluate value, gradient and Hessian in one pass; null outputs skipped.
  void eval(const Eigen::VectorXd& theta, double* value, Eigen::VectorXd* grad,
            Eigen::MatrixXd* hess) const;

  /// Render to a string that re-parses to an expression with identical
  /// evaluations (fully parenthesized).
  std::string to_string() const;

private:
  RestrictionExpr(NodePtr root, int dim) : root_(std::move(root)), dim_(dim) {}
  NodePtr root_;
  int dim_ = 0;
};

/// The full restriction system: q expressions over a common parameter space,
/// a positive definite credibility weighting Sigma, and the induced quadratic
/// form h(theta) = g(theta)' Sigma^{-1} g(theta). Sigma is applied through a
/// cached Cholesky factorization, never inverted explicitly. Immutable and
/// safe to share across threads.
class RestrictionSystem {
public:
  RestrictionSystem(std::vector<RestrictionExpr> exprs, Eigen::MatrixXd sigma,
                    std::vector<std::string> labels = {});

  static RestrictionSystem with_identity_sigma(std::vector<RestrictionExpr> exprs,
                                               std::vector<std::string> labels = {});

  int q() const { return static_cast<int>(exprs_.size()); }
  int p() const { return dim_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const RestrictionExpr& expr(int j) const { return exprs_.at(static_cast<std::size_t>(j)); }

  /// True when every expression is affine; the Jacobian is then constant.
  bool linear() const { return linear_; }
  /// Constant Jacobian G0 and offset g0 with g(theta) = G0 theta + g0.
  /// Only valid when linear().
  const Eigen::MatrixXd& linear_jacobian() const;
  const Eigen::VectorXd& linear_offset() const;

  Eigen::VectorXd eval_g(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd eval_G(const Eigen::VectorXd& theta) const;
  double eval_h(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd eval_h_grad(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd eval_h_hess(const Eigen::VectorXd& theta) const;

  /// Sigma^{-1} * rhs through the cached factorization.
  Eigen::MatrixXd sigma_solve(const Eigen::MatrixXd& rhs) const;

private:
  void check_theta(const Eigen::VectorXd& theta) const;

  std::vector<RestrictionExpr> exprs_;
  Eigen::MatrixXd sigma_;
  std::vector<std::string> labels_;
  Eigen::LLT<Eigen::MatrixXd> sigma_llt_;
  int dim_ = 0;
  bool linear_ = false;
  Eigen::MatrixXd linear_jacobian_;   // q x p, linear systems only
  Eigen::VectorXd linear_offset_;     // q, linear systems only
  Eigen::MatrixXd h_hess_linear_;     // cached 2 G0' Sigma^{-1} G0
};

} // namespace softrestrict

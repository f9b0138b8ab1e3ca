#pragma once

// Expected-smoothness (ABC) upper bounds on E||g_M||^2 and the matching
// lower bound for the matrix-square-root family:
//
//   E||g_M||^2 <= 2 A (F(lambda) - F*) + B ||grad F(lambda)||^2 + C

#include <optional>
#include <string>

#include "bbvi/reparam.hpp"
#include "bbvi/targets.hpp"

namespace bbvi {

/// Raised when a bound's hypotheses do not hold (non-Lipschitz conditioner,
/// missing entropy floor, ill-conditioned lower-bound instance).
class BoundNotApplicable : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class BoundTheorem { kEntropy, kKl, kBoundedEntropy };

std::string_view theorem_name(BoundTheorem th);

struct AbcBound {
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;
  BoundTheorem theorem = BoundTheorem::kEntropy;
  std::string provenance;
};

/// Dimension factor: 2 kappa sqrt(d) + 1 for mean-field, d + kappa for the
/// full-rank families.
double c_dim(std::size_t d, double kappa, Family family,
             const Conditioner& phi = Conditioner::identity());

/// A = 2 L_H^2 C(d,k) / (mu_KL M);
/// C = (2 L_H^2 / M) C(d,k) ||zeta_KL - zeta_H||^2 + 2 A (F* - f*_KL).
AbcBound abc_entropy_form(const ConstantsRecord& c, std::size_t d, double kappa, std::size_t m,
                          Family family, const Conditioner& phi = Conditioner::identity());

/// A = L_KL^2 C(d,k) / (mu_KL M);  C = 2 A (F* - f*_KL).
AbcBound abc_kl_form(const ConstantsRecord& c, std::size_t d, double kappa, std::size_t m,
                     Family family, const Conditioner& phi = Conditioner::identity());

/// A = L_H^2 C(d,k) / (mu_H M);  C = 2 A (F* - f*_H - h*). Needs c.h_star.
AbcBound abc_bounded_entropy(const ConstantsRecord& c, std::size_t d, double kappa, std::size_t m,
                             Family family, const Conditioner& phi);

AbcBound make_bound(BoundTheorem th, const ConstantsRecord& c, std::size_t d, double kappa,
                    std::size_t m, Family family, const Conditioner& phi);

struct AbcTerms {
  double a_term;  // 2 A gap
  double b_term;  // B ||grad F||^2
  double c_term;  // C
  double total() const { return a_term + b_term + c_term; }
};

/// Gaps down to -1e-9 are clamped to zero; anything lower is rejected.
AbcTerms abc_terms(const AbcBound& bound, double gap, double grad_sqnorm);
double evaluate_abc(const AbcBound& bound, double gap, double grad_sqnorm);

/// (2 mu^2 (d+1) - 2 L^2) / (M L). Throws BoundNotApplicable when
/// L / mu > sqrt(d + 1).
double lower_bound_coefficient(double l_smooth, double mu, std::size_t d, std::size_t m);

/// coefficient * (gap + baseline) + grad_sqnorm, with (L, mu) taken from the
/// form's f: (L_H, mu_H) or (L_KL, mu_KL). Only the matrix-square-root family
/// is covered.
double lower_bound_rhs(const ConstantsRecord& c, std::size_t d, std::size_t m, double gap,
                       double grad_sqnorm, double baseline, Family family = Family::kSquareRoot,
                       ElboForm form = ElboForm::kEntropy);

/// coefficient * (E f(t_lambda(u)) - f*) + grad_sqnorm: the inequality before
/// the entropy term is traded for F - F*. It differs from lower_bound_rhs by
/// coefficient * (h(lambda) - h(lambda*)), so it is the one that holds at every
/// lambda rather than only close enough to lambda*.
double lower_bound_rhs_expected_f(const ConstantsRecord& c, std::size_t d, std::size_t m,
                                  double expected_f_gap, double grad_sqnorm,
                                  Family family = Family::kSquareRoot,
                                  ElboForm form = ElboForm::kEntropy);

/// E f(t_{lambda*}(u)) - f* at the optimum lambda* of F, in closed form.
double lower_bound_baseline(const TargetModel& t, ElboForm form = ElboForm::kEntropy);

}  // namespace bbvi

#include "ccrn/erasure_model.hpp"

#include <cmath>
#include <sstream>

#include "ccrn/errors.hpp"

namespace ccrn {

namespace {

constexpr double kNormTolerance = 1e-12;

// Reception bit of `node` inside a joint-pmf index. Both layouts (4*z2 + 2*z3 + z4 and
// 2*z3 + z4) put node j at bit 4 - j.
bool received_in_outcome(int /*transmitter*/, int outcome, int node) { return (outcome >> (4 - node)) & 1; }

bool all_erased(int transmitter, int outcome, NodeSet set) {
  for (int node = 2; node <= 4; ++node)
    if (set.contains(node) && received_in_outcome(transmitter, outcome, node)) return false;
  return true;
}

void validate_set(int transmitter, NodeSet set) {
  if (transmitter != 1 && transmitter != 2)
    throw DomainError("transmitter must be 1 or 2, got " + std::to_string(transmitter));
  if (set.empty()) throw DomainError("erasure set must be nonempty");
  if (!set.subset_of(listeners(transmitter)))
    throw DomainError("set " + set.to_string() + " is not contained in the listeners of node " +
                      std::to_string(transmitter));
}

template <std::size_t N>
void validate_pmf(const std::array<double, N>& pmf, const char* name) {
  double total = 0.0;
  for (double p : pmf) {
    if (!std::isfinite(p) || p < 0.0) throw DomainError(std::string(name) + " has a negative or non-finite mass");
    total += p;
  }
  if (std::abs(total - 1.0) > kNormTolerance)
    throw DomainError(std::string(name) + " sums to " + std::to_string(total) + ", expected 1");
}

template <std::size_t N>
void validate_exact_pmf(const std::array<Rational, N>& pmf, const char* name) {
  Rational total = 0;
  for (const auto& p : pmf) {
    if (p < 0) throw DomainError(std::string(name) + " has a negative mass");
    total += p;
  }
  if (total != 1) throw DomainError(std::string(name) + " does not sum to exactly 1");
}

void check_link_prob(double e, const char* name) {
  if (!(e >= 0.0 && e < 1.0)) throw DomainError(std::string(name) + " must lie in [0,1)");
}

template <typename T>
std::array<T, 8> product_node1(const T& e12, const T& e13, const T& e14) {
  std::array<T, 8> pmf;
  for (int i = 0; i < 8; ++i) {
    const T p2 = ((i >> 2) & 1) ? T(1 - e12) : e12;
    const T p3 = ((i >> 1) & 1) ? T(1 - e13) : e13;
    const T p4 = (i & 1) ? T(1 - e14) : e14;
    pmf[i] = p2 * p3 * p4;
  }
  return pmf;
}

template <typename T>
std::array<T, 4> product_node2(const T& e23, const T& e24) {
  std::array<T, 4> pmf;
  for (int i = 0; i < 4; ++i) {
    const T p3 = ((i >> 1) & 1) ? T(1 - e23) : e23;
    const T p4 = (i & 1) ? T(1 - e24) : e24;
    pmf[i] = p3 * p4;
  }
  return pmf;
}

}  // namespace

std::string NodeSet::to_string() const {
  std::string out = "{";
  for (int node = 2; node <= 4; ++node) {
    if (!contains(node)) continue;
    if (out.size() > 1) out += ",";
    out += std::to_string(node);
  }
  return out + "}";
}

NodeSet listeners(int transmitter) {
  if (transmitter == 1) return kListeners1;
  if (transmitter == 2) return kListeners2;
  throw DomainError("transmitter must be 1 or 2, got " + std::to_string(transmitter));
}

ErasureModel::ErasureModel() {
  node1_[7] = 1.0;
  node2_[3] = 1.0;
  build_cdf();
}

ErasureModel ErasureModel::joint(const Node1Pmf& node1, const Node2Pmf& node2) {
  validate_pmf(node1, "node1 joint pmf");
  validate_pmf(node2, "node2 joint pmf");
  ErasureModel m;
  m.node1_ = node1;
  m.node2_ = node2;
  m.build_cdf();
  return m;
}

ErasureModel ErasureModel::joint_exact(const ExactNode1Pmf& node1, const ExactNode2Pmf& node2) {
  validate_exact_pmf(node1, "node1 joint pmf");
  validate_exact_pmf(node2, "node2 joint pmf");
  ErasureModel m;
  for (int i = 0; i < 8; ++i) m.node1_[i] = static_cast<double>(node1[i]);
  for (int i = 0; i < 4; ++i) m.node2_[i] = static_cast<double>(node2[i]);
  m.exact1_ = node1;
  m.exact2_ = node2;
  m.build_cdf();
  return m;
}

ErasureModel ErasureModel::independent(double e12, double e13, double e14, double e23, double e24) {
  check_link_prob(e12, "e12");
  check_link_prob(e13, "e13");
  check_link_prob(e14, "e14");
  check_link_prob(e23, "e23");
  check_link_prob(e24, "e24");
  return joint(product_node1(e12, e13, e14), product_node2(e23, e24));
}

ErasureModel ErasureModel::independent_exact(const Rational& e12, const Rational& e13, const Rational& e14,
                                             const Rational& e23, const Rational& e24) {
  for (const Rational* e : {&e12, &e13, &e14, &e23, &e24})
    if (*e < 0 || *e >= 1) throw DomainError("link erasure probabilities must lie in [0,1)");
  return joint_exact(product_node1(e12, e13, e14), product_node2(e23, e24));
}

void ErasureModel::build_cdf() {
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) cdf1_[i] = acc += node1_[i];
  acc = 0.0;
  for (int i = 0; i < 4; ++i) cdf2_[i] = acc += node2_[i];
}

double ErasureModel::erasure_prob(int transmitter, NodeSet set) const {
  validate_set(transmitter, set);
  double total = 0.0;
  if (transmitter == 1) {
    for (int i = 0; i < 8; ++i)
      if (all_erased(1, i, set)) total += node1_[i];
  } else {
    for (int i = 0; i < 4; ++i)
      if (all_erased(2, i, set)) total += node2_[i];
  }
  return total;
}

Rational ErasureModel::exact_erasure_prob(int transmitter, NodeSet set) const {
  validate_set(transmitter, set);
  if (!has_exact()) throw DomainError("model carries no exact masses");
  Rational total = 0;
  if (transmitter == 1) {
    for (int i = 0; i < 8; ++i)
      if (all_erased(1, i, set)) total += (*exact1_)[i];
  } else {
    for (int i = 0; i < 4; ++i)
      if (all_erased(2, i, set)) total += (*exact2_)[i];
  }
  return total;
}

Reception ErasureModel::sample(int transmitter, Rng& rng) const {
  const double u = rng.uniform();
  if (transmitter == 1) {
    int i = 0;
    while (i < 7 && u >= cdf1_[i]) ++i;
    // Skip zero-mass outcomes that a rounding-short cdf could land on.
    while (i > 0 && node1_[i] == 0.0) --i;
    NodeSet got;
    for (int node = 2; node <= 4; ++node)
      if (received_in_outcome(1, i, node)) got = got.with(node);
    return {got};
  }
  if (transmitter != 2) throw DomainError("transmitter must be 1 or 2");
  int i = 0;
  while (i < 3 && u >= cdf2_[i]) ++i;
  while (i > 0 && node2_[i] == 0.0) --i;
  NodeSet got;
  for (int node = 3; node <= 4; ++node)
    if (received_in_outcome(2, i, node)) got = got.with(node);
  return {got};
}

std::string_view to_string(CaseLabel c) {
  switch (c) {
    case CaseLabel::Case1: return "Case1";
    case CaseLabel::Case2: return "Case2";
    case CaseLabel::Case3: return "Case3";
  }
  return "?";
}

void check_region_preconditions(const ErasureModel& m) {
  struct Denominator {
    int tx;
    NodeSet set;
    const char* name;
  };
  static constexpr Denominator kDenominators[] = {
      {1, {2, 3}, "eps1_23 < 1"}, {1, {2, 3, 4}, "eps1_234 < 1"}, {1, {3, 4}, "eps1_34 < 1"},
      {1, {4}, "eps1_4 < 1"},     {2, {3}, "eps2_3 < 1"},         {2, {4}, "eps2_4 < 1"},
      {2, {3, 4}, "eps2_34 < 1"},
  };
  if (m.has_exact()) {
    if (m.exact_erasure_prob(1, {3}) < m.exact_erasure_prob(2, {3}))
      throw PreconditionError("precondition violated: eps1_3 >= eps2_3");
    for (const auto& d : kDenominators)
      if (m.exact_erasure_prob(d.tx, d.set) >= 1) throw PreconditionError(std::string("precondition violated: ") + d.name);
    return;
  }
  if (m.erasure_prob(1, {3}) < m.erasure_prob(2, {3}) - kCaseTolerance)
    throw PreconditionError("precondition violated: eps1_3 >= eps2_3");
  for (const auto& d : kDenominators)
    if (m.erasure_prob(d.tx, d.set) >= 1.0 - kCaseTolerance)
      throw PreconditionError(std::string("precondition violated: ") + d.name);
}

CaseLabel classify_case(const ErasureModel& m) {
  check_region_preconditions(m);
  if (m.has_exact()) {
    const Rational r1 = (1 - m.exact_erasure_prob(1, {3, 4})) / (1 - m.exact_erasure_prob(2, {3, 4}));
    const Rational r2 = (1 - m.exact_erasure_prob(1, {4})) / (1 - m.exact_erasure_prob(2, {4}));
    if (r1 <= 1 && r2 <= 1) return CaseLabel::Case1;
    return r1 >= r2 ? CaseLabel::Case2 : CaseLabel::Case3;
  }
  const double r1 = (1.0 - m.erasure_prob(1, {3, 4})) / (1.0 - m.erasure_prob(2, {3, 4}));
  const double r2 = (1.0 - m.erasure_prob(1, {4})) / (1.0 - m.erasure_prob(2, {4}));
  if (std::max(r1, r2) <= 1.0 + kCaseTolerance) return CaseLabel::Case1;
  return r1 >= r2 - kCaseTolerance ? CaseLabel::Case2 : CaseLabel::Case3;
}

Rational parse_rational(std::string_view text) {
  auto fail = [&] { return DomainError("cannot parse '" + std::string(text) + "' as an exact number"); };
  if (text.empty()) throw fail();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_rational(text.substr(0, slash));
    const Rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) throw fail();
    return num / den;
  }
  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') negative = text[pos++] == '-';
  boost::multiprecision::cpp_int digits = 0;
  int scale = 0;
  bool any_digit = false, seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char ch = text[pos];
    if (ch >= '0' && ch <= '9') {
      digits = digits * 10 + (ch - '0');
      any_digit = true;
      if (seen_point) --scale;
    } else if (ch == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) throw fail();
  if (pos < text.size()) {
    if (text[pos] != 'e' && text[pos] != 'E') throw fail();
    ++pos;
    bool exp_negative = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) exp_negative = text[pos++] == '-';
    if (pos == text.size()) throw fail();
    int exponent = 0;
    for (; pos < text.size(); ++pos) {
      if (text[pos] < '0' || text[pos] > '9' || exponent > 100000) throw fail();
      exponent = exponent * 10 + (text[pos] - '0');
    }
    scale += exp_negative ? -exponent : exponent;
  }
  Rational value(digits);
  const boost::multiprecision::cpp_int ten_pow = boost::multiprecision::pow(boost::multiprecision::cpp_int(10), std::abs(scale));
  value = scale >= 0 ? value * Rational(ten_pow) : value / Rational(ten_pow);
  return negative ? -value : value;
}

}  // namespace ccrn

#include "ecgbnn/fusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace ecgbnn {

namespace {

template <typename T>
BranchRule<T> constant_rule(bool positive) {
  return {positive ? Comparison::kAlwaysPositive : Comparison::kAlwaysNegative, T{}};
}

// Analytic rule for sign(slope * x + b) restricted to integers in [lo, hi].
// The rounded boundary is nudged so it agrees with slope * x + b evaluated in
// double precision, which is what the composition computes.
BranchRule<std::int32_t> integer_branch(double slope, double b, std::int32_t lo, std::int32_t hi) {
  if (slope == 0.0) return constant_rule<std::int32_t>(b >= 0.0);
  const double boundary = -b / slope;
  const auto positive_at = [&](double x) { return slope * x + b >= 0.0; };
  const double below = static_cast<double>(lo) - 1.0;
  const double above = static_cast<double>(hi) + 1.0;
  if (slope > 0.0) {
    double t = std::clamp(std::ceil(boundary), below, above);
    while (t > below && positive_at(t - 1.0)) t -= 1.0;
    while (t < above && !positive_at(t)) t += 1.0;
    if (t <= lo) return constant_rule<std::int32_t>(true);
    if (t > hi) return constant_rule<std::int32_t>(false);
    return {Comparison::kGreaterEqual, static_cast<std::int32_t>(t)};
  }
  double t = std::clamp(std::floor(boundary), below, above);
  while (t < above && positive_at(t + 1.0)) t += 1.0;
  while (t > below && !positive_at(t)) t -= 1.0;
  if (t >= hi) return constant_rule<std::int32_t>(true);
  if (t < lo) return constant_rule<std::int32_t>(false);
  return {Comparison::kLessEqual, static_cast<std::int32_t>(t)};
}

// Analytic rule for sign(slope * x + b) on x >= 0 (positive_half) or x < 0.
BranchRule<float> real_branch(double slope, double b, bool positive_half) {
  if (slope == 0.0) return constant_rule<float>(b >= 0.0);
  const auto t = static_cast<float>(-b / slope);
  const bool increasing = slope > 0.0;
  const Comparison cmp = increasing ? Comparison::kGreaterEqual : Comparison::kLessEqual;
  if (positive_half) {
    if (t < 0.0F) return constant_rule<float>(!increasing);
    if (std::isinf(t)) return constant_rule<float>(!increasing);
  } else {
    if (t >= 0.0F) return constant_rule<float>(!increasing);
    if (std::isinf(t)) return constant_rule<float>(increasing);
  }
  return {cmp, t};
}

// Total order on finite floats as integers; +0 and -0 share key 0.
std::int64_t float_key(float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  if ((u & 0x80000000U) != 0) return -static_cast<std::int64_t>(u & 0x7fffffffU);
  return static_cast<std::int64_t>(u);
}

float key_float(std::int64_t k) {
  if (k >= 0) return std::bit_cast<float>(static_cast<std::uint32_t>(k));
  return std::bit_cast<float>(static_cast<std::uint32_t>(-k) | 0x80000000U);
}

// Rebuilds one branch from the composition on an ordered range, assuming
// monotonicity (true for IEEE-rounded PReLU/BatchNorm). `at` maps an index in
// [lo, hi] to the domain value.
template <typename T, typename Index, typename At>
BranchRule<T> exact_branch(const UnfusedChannel& ch, Index lo, Index hi, At at) {
  const int first = ch.decide(static_cast<double>(at(lo)));
  const int last = ch.decide(static_cast<double>(at(hi)));
  if (first == last) return constant_rule<T>(first > 0);
  if (first < 0) {
    // - ... - + ... +: smallest index deciding +1.
    Index a = lo;
    Index b = hi;
    while (b - a > 1) {
      const Index mid = a + (b - a) / 2;
      if (ch.decide(static_cast<double>(at(mid))) > 0) {
        b = mid;
      } else {
        a = mid;
      }
    }
    return {Comparison::kGreaterEqual, at(b)};
  }
  // + ... + - ... -: largest index deciding +1.
  Index a = lo;
  Index b = hi;
  while (b - a > 1) {
    const Index mid = a + (b - a) / 2;
    if (ch.decide(static_cast<double>(at(mid))) > 0) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return {Comparison::kLessEqual, at(a)};
}

bool integer_branch_agrees(const BranchRule<std::int32_t>& rule, const UnfusedChannel& ch,
                           std::int32_t lo, std::int32_t hi) {
  for (std::int32_t x = lo; x <= hi; ++x) {
    if (rule.decide(x) != ch.decide(static_cast<double>(x))) return false;
  }
  return true;
}

// Complete check under monotonicity: the ends of the half-domain and both
// sides of the switch point.
bool real_branch_agrees(const BranchRule<float>& rule, const UnfusedChannel& ch, float lo,
                        float hi) {
  auto agrees = [&](float x) {
    return x >= lo && x <= hi ? rule.decide(x) == ch.decide(x) : true;
  };
  if (!agrees(lo) || !agrees(hi)) return false;
  if (rule.is_constant()) return true;
  const float t = rule.threshold;
  const float inf = std::numeric_limits<float>::infinity();
  return agrees(t) && agrees(std::nextafter(t, -inf)) && agrees(std::nextafter(t, inf));
}

constexpr float kMaxFloat = std::numeric_limits<float>::max();
constexpr float kMinSubnormal = std::numeric_limits<float>::denorm_min();

}  // namespace

AffineFold fold_affine(double gamma, double beta, double mean, double var, double eps) {
  const double k = gamma / std::sqrt(var + eps);
  return {k, beta - mean * k};
}

FusedChannelParams derive_thresholds(double k, double b, double a, const ActivationDomain& domain) {
  if (!std::isfinite(k) || !std::isfinite(b) || !std::isfinite(a)) {
    throw InvalidValueError("derive_thresholds: non-finite parameter");
  }
  if (const auto* d = std::get_if<IntegerDomain>(&domain)) {
    const std::int32_t n = d->bound;
    IntThresholdChannel ch;
    ch.pos = integer_branch(k, b, 0, n);
    ch.neg = n > 0 ? integer_branch(a * k, b, -n, -1) : constant_rule<std::int32_t>(false);
    return ch;
  }
  RealThresholdChannel ch;
  ch.pos = real_branch(k, b, true);
  ch.neg = real_branch(a * k, b, false);
  return ch;
}

FusedChannelParams fuse_channel(const UnfusedChannel& ch, bool has_following_sign,
                                const ActivationDomain& domain) {
  const AffineFold fold = fold_affine(ch.gamma, ch.beta, ch.mean, ch.var, ch.eps);
  if (!has_following_sign) {
    if (!std::isfinite(fold.k) || !std::isfinite(fold.b) || !std::isfinite(ch.slope)) {
      throw InvalidValueError("fuse_channel: non-finite affine parameters");
    }
    return AffineChannel{static_cast<float>(fold.k), static_cast<float>(fold.b),
                         static_cast<float>(ch.slope)};
  }

  FusedChannelParams fused = derive_thresholds(fold.k, fold.b, ch.slope, domain);
  if (auto* p = std::get_if<IntThresholdChannel>(&fused)) {
    const std::int32_t n = std::get<IntegerDomain>(domain).bound;
    auto identity = [](std::int32_t x) { return x; };
    if (!integer_branch_agrees(p->pos, ch, 0, n)) {
      p->pos = exact_branch<std::int32_t>(ch, std::int32_t{0}, n, identity);
    }
    if (n > 0 && !integer_branch_agrees(p->neg, ch, -n, -1)) {
      p->neg = exact_branch<std::int32_t>(ch, -n, std::int32_t{-1}, identity);
    }
  } else {
    auto& r = std::get<RealThresholdChannel>(fused);
    if (!real_branch_agrees(r.pos, ch, 0.0F, kMaxFloat)) {
      r.pos = exact_branch<float>(ch, float_key(0.0F), float_key(kMaxFloat), key_float);
    }
    if (!real_branch_agrees(r.neg, ch, -kMaxFloat, -kMinSubnormal)) {
      r.neg = exact_branch<float>(ch, float_key(-kMaxFloat), float_key(-kMinSubnormal), key_float);
    }
  }

  const FusionReport report = verify_fusion(fused, ch, domain);
  if (!report.ok) {
    throw Error("fuse_channel: composition is not representable as thresholds: " + report.detail);
  }
  return fused;
}

UnfusedChannel BlockNormParams::channel(std::size_t c) const {
  return {gamma[c], beta[c], mean[c], var[c], eps, slope[c]};
}

std::vector<FusedChannelParams> fuse_block(const BlockNormParams& params, bool has_following_sign,
                                           const ActivationDomain& domain) {
  const std::size_t c = params.gamma.size();
  if (params.beta.size() != c || params.mean.size() != c || params.var.size() != c ||
      params.slope.size() != c) {
    throw DimensionError("fuse_block: per-channel parameter arrays differ in length");
  }
  std::vector<FusedChannelParams> out;
  out.reserve(c);
  for (std::size_t i = 0; i < c; ++i) {
    out.push_back(fuse_channel(params.channel(i), has_following_sign, domain));
  }
  return out;
}

namespace {

void record_mismatch(FusionReport& r, double x, double fused, double reference) {
  if (!r.ok) return;
  r.ok = false;
  r.mismatch_at = x;
  r.fused_value = fused;
  r.reference_value = reference;
  std::ostringstream os;
  os.precision(17);
  os << "x=" << x << " fused=" << fused << " reference=" << reference;
  r.detail = os.str();
}

std::vector<float> real_probe_points(const RealThresholdChannel& p, const UnfusedChannel& ch) {
  std::vector<float> pts;
  const float inf = std::numeric_limits<float>::infinity();
  auto around = [&](float c) {
    if (!std::isfinite(c)) return;
    float lo = c;
    float hi = c;
    pts.push_back(c);
    for (int i = 0; i < 4; ++i) {
      lo = std::nextafter(lo, -inf);
      hi = std::nextafter(hi, inf);
      pts.push_back(lo);
      pts.push_back(hi);
    }
  };
  for (float v : {0.0F, -0.0F, kMinSubnormal, -kMinSubnormal, kMaxFloat, -kMaxFloat}) {
    pts.push_back(v);
  }
  for (int i = -2000; i <= 2000; ++i) pts.push_back(static_cast<float>(i) * 0.5F);
  for (int e = -30; e <= 30; ++e) {
    const auto m = static_cast<float>(std::pow(10.0, e));
    pts.push_back(m);
    pts.push_back(-m);
  }
  for (const auto* rule : {&p.pos, &p.neg}) {
    if (!rule->is_constant()) around(rule->threshold);
  }
  const AffineFold f = fold_affine(ch.gamma, ch.beta, ch.mean, ch.var, ch.eps);
  if (f.k != 0.0) around(static_cast<float>(-f.b / f.k));
  if (f.k * ch.slope != 0.0) around(static_cast<float>(-f.b / (f.k * ch.slope)));
  return pts;
}

}  // namespace

FusionReport verify_fusion(const FusedChannelParams& params, const UnfusedChannel& unfused,
                           const ActivationDomain& domain) {
  FusionReport report;
  if (const auto* p = std::get_if<IntThresholdChannel>(&params)) {
    const auto* d = std::get_if<IntegerDomain>(&domain);
    if (d == nullptr) {
      report.ok = false;
      report.detail = "integer thresholds checked against a real domain";
      return report;
    }
    for (std::int32_t x = -d->bound; x <= d->bound; ++x) {
      ++report.points_checked;
      const int got = p->decide(x);
      const int want = unfused.decide(static_cast<double>(x));
      if (got != want) {
        record_mismatch(report, x, got, want);
        break;
      }
    }
    return report;
  }
  if (const auto* p = std::get_if<RealThresholdChannel>(&params)) {
    for (float x : real_probe_points(*p, unfused)) {
      ++report.points_checked;
      const int got = p->decide(x);
      const int want = unfused.decide(static_cast<double>(x));
      if (got != want) {
        record_mismatch(report, x, got, want);
        break;
      }
    }
    return report;
  }

  const auto& aff = std::get<AffineChannel>(params);
  auto check = [&](double x) {
    ++report.points_checked;
    const double got = x >= 0.0 ? static_cast<double>(aff.k) * x + aff.b
                                : static_cast<double>(aff.a) * aff.k * x + aff.b;
    const double want = unfused.affine(x);
    const double scale = std::abs(static_cast<double>(aff.k) * x) *
                             std::max(1.0, std::abs(static_cast<double>(aff.a))) +
                         std::abs(static_cast<double>(aff.b)) + 1e-30;
    if (std::abs(got - want) > 1e-6 * scale) record_mismatch(report, x, got, want);
  };
  if (const auto* d = std::get_if<IntegerDomain>(&domain)) {
    for (std::int32_t x = -d->bound; x <= d->bound && report.ok; ++x) check(x);
  } else {
    for (int i = -2000; i <= 2000 && report.ok; ++i) check(i * 0.5);
  }
  return report;
}

}  // namespace ecgbnn

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "reno/autodiff.hpp"
#include "reno/generator.hpp"
#include "reno/tensor.hpp"

namespace reno {

enum class Channel { kR = 0, kG = 1, kB = 2 };

Channel parse_channel(const std::string& name);

enum class RewardKind {
  kProtoAlign,       // negative distance to a target field
  kBrightnessTaste,  // preference bump around a target mean luminance
  kEdgeSmooth,       // neighboring-pixel difference penalty
  kPromptMatch,      // cosine-style match between pooled features and a target
  kColorChannel,     // raise one channel, lower the other two
};

RewardKind parse_reward_kind(const std::string& name);
const char* reward_kind_name(RewardKind kind);

// A frozen differentiable scorer with a declared score range and weight.
// Scorer outputs always lie inside [lo, hi].
struct RewardTerm {
  std::string name;
  RewardKind kind = RewardKind::kProtoAlign;
  double weight = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  std::uint64_t seed = 0;
  Channel channel = Channel::kR;  // color terms only
  std::function<ad::Tensor(ad::Tape&, const ad::Tensor& image, const PromptEmbedding&)> scorer;
};

struct CriterionSpec {
  std::vector<RewardTerm> terms;
  double lambda_reg = 0.01;
};

// Sum over pixels of the target channel minus the two other channels.
ad::Tensor color_criterion(ad::Tape& tape, const ad::Tensor& image, Channel target);

// Log-likelihood of the noise norm under the chi distribution with d degrees
// of freedom (up to its constant): (d - 1) * log(||eps||) - ||eps||^2 / 2.
// Maximized at ||eps|| = sqrt(d - 1); keeps the noise near the Gaussian shell.
ad::Tensor chi_norm_logpdf(ad::Tape& tape, const ad::Tensor& eps);

RewardTerm make_toy_reward(RewardKind kind, std::pair<double, double> range, double weight,
                           std::uint64_t seed);
RewardTerm make_color_reward(Channel target, double weight, std::size_t height,
                             std::size_t width);

// weight * (hi - lo): the term's weight when its range is rescaled to [0, 1].
double effective_weight(const RewardTerm& term);

// The shipped four-term suite: proto_align [-2,2] w=1, brightness_taste
// [0.2,0.4] w=5, edge_smooth [20,30] w=0.05, prompt_match [0,1] w=1.
CriterionSpec default_criterion(double lambda_reg = 0.01);

struct CombinedReward {
  ad::Tensor total;              // weighted sum, on tape
  std::vector<double> per_term;  // unweighted values, for logging
};

CombinedReward combined_reward(ad::Tape& tape, const CriterionSpec& spec,
                               const ad::Tensor& image, const PromptEmbedding& p);

struct ObjectiveParts {
  ad::Tensor objective;          // J = lambda_reg * K(eps) + R_total, on tape
  ad::Tensor image;              // generated image, on tape
  double reward_total = 0.0;     // R_total (selection score; excludes K)
  std::vector<double> per_term;  // unweighted term values
  double k_eps = 0.0;            // K(eps)
};

// eps_leaf must be a leaf on `tape`.
ObjectiveParts full_objective(ad::Tape& tape, const CriterionSpec& spec, const GeneratorSpec& g,
                              const ad::Tensor& eps_leaf, const PromptEmbedding& p);

// Target field used by proto_align / prompt_match style terms, exposed for
// tests: an [h, w, 3] image in (0, 1), deterministic in (seed, prompt).
std::vector<double> reward_target_field(std::uint64_t seed, const PromptEmbedding& p,
                                        std::size_t height, std::size_t width);
double preferred_luminance(std::uint64_t seed, const PromptEmbedding& p);

}  // namespace reno

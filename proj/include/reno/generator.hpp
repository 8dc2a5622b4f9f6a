#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "reno/autodiff.hpp"
#include "reno/tensor.hpp"

namespace reno {

enum class GeneratorKind { kLinear, kMlp, kColorField, kLatentDecoder };

GeneratorKind parse_generator_kind(const std::string& name);
const char* generator_kind_name(GeneratorKind kind);

// Deterministic hash-seeded prompt representation; stands in for a text
// encoder. Identical text always yields the identical unit-norm vector.
struct PromptEmbedding {
  std::vector<double> vector;
  std::string source_text;
};

// Standard-normal sample of dimension d plus the seed it came from.
struct NoiseVector {
  std::vector<double> values;
  std::uint64_t seed = 0;

  std::size_t dim() const { return values.size(); }
  double norm() const;
};

// A frozen differentiable map (noise, prompt embedding) -> image in [0,1].
// Weights are fixed at construction from weight_seed and never change.
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::kLinear;
  std::size_t noise_dim = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t prompt_dim = 0;
  std::uint64_t weight_seed = 0;
  std::vector<std::pair<std::string, ad::Tensor>> weights;

  std::size_t pixel_count() const { return height * width * 3; }
  const ad::Tensor& weight(const std::string& name) const;
};

inline constexpr std::size_t kPromptDim = 16;

GeneratorSpec make_generator(GeneratorKind kind, std::size_t noise_dim, std::size_t height,
                             std::size_t width, std::uint64_t weight_seed);

PromptEmbedding embed_prompt(const std::string& text, std::size_t d_p = kPromptDim);

// eps must be a leaf (or derived value) on `tape`; the result is an [H, W, 3]
// image whose every entry lies in (0, 1).
ad::Tensor generate(ad::Tape& tape, const GeneratorSpec& g, const ad::Tensor& eps,
                    const PromptEmbedding& p);

// Latent-generator / decoder split, defined for the latent_decoder kind:
// generate == decode_latent(generate_latent).
ad::Tensor generate_latent(ad::Tape& tape, const GeneratorSpec& g, const ad::Tensor& eps,
                           const PromptEmbedding& p);
ad::Tensor decode_latent(ad::Tape& tape, const GeneratorSpec& g, const ad::Tensor& latent);

// Self-describing binary weight format: magic, version, kind, dimensions,
// f64 little-endian payloads. Byte-exact across platforms.
std::vector<std::uint8_t> serialize_generator(const GeneratorSpec& g);
GeneratorSpec deserialize_generator(const std::vector<std::uint8_t>& bytes);
void save_generator(const GeneratorSpec& g, const std::string& path);
GeneratorSpec load_generator(const std::string& path);

}  // namespace reno

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "reno/autodiff.hpp"
#include "reno/criteria.hpp"
#include "reno/errors.hpp"
#include "reno/generator.hpp"
#include "reno/optimizer.hpp"
#include "reno/rng.hpp"
#include "support.hpp"

using namespace reno;
using ad::Gradients;
using ad::Tape;
using ad::Tensor;
using testsupport::TempDir;

namespace {

Tensor image_for(const GeneratorSpec& g, std::uint64_t eps_seed, const PromptEmbedding& p) {
  Tape tape;
  Tensor eps = tape.leaf(Tensor::vector(rng::normal_vector(g.noise_dim, eps_seed)));
  return generate(tape, g, eps, p);
}

}  // namespace

TEST_CASE("construction is deterministic in the weight seed") {
  GeneratorSpec a = make_generator(GeneratorKind::kLinear, 12, 2, 2, 7);
  GeneratorSpec b = make_generator(GeneratorKind::kLinear, 12, 2, 2, 7);
  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    CHECK(a.weights[i].first == b.weights[i].first);
    CHECK(a.weights[i].second.data == b.weights[i].second.data);
  }
  GeneratorSpec c = make_generator(GeneratorKind::kLinear, 12, 2, 2, 8);
  CHECK(a.weight("w").data != c.weight("w").data);
}

TEST_CASE("zero weights with the sigmoid squash give a flat 0.5 image") {
  GeneratorSpec g = make_generator(GeneratorKind::kLinear, 8, 2, 3, 1);
  for (auto& [name, tensor] : g.weights) {
    for (double& v : tensor.data) v = 0.0;
  }
  Tensor img = image_for(g, 5, embed_prompt("anything"));
  for (double v : img.data) CHECK(v == 0.5);
}

TEST_CASE("mlp output has the declared shape and range") {
  GeneratorSpec g = make_generator(GeneratorKind::kMlp, 32, 8, 8, 3);
  Tensor img = image_for(g, 11, embed_prompt("shape check"));
  CHECK(img.shape == std::vector<std::size_t>{8, 8, 3});
  for (double v : img.data) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("generation is a pure function of (generator, noise, prompt)") {
  for (GeneratorKind kind : {GeneratorKind::kLinear, GeneratorKind::kMlp,
                             GeneratorKind::kColorField, GeneratorKind::kLatentDecoder}) {
    GeneratorSpec g = make_generator(kind, 16, 6, 6, 2);
    PromptEmbedding p = embed_prompt("purity");
    CHECK(image_for(g, 9, p).data == image_for(g, 9, p).data);
  }
}

TEST_CASE("image range holds over many random draws for every kind") {
  PromptEmbedding p = embed_prompt("range sweep");
  for (GeneratorKind kind : {GeneratorKind::kLinear, GeneratorKind::kMlp,
                             GeneratorKind::kColorField, GeneratorKind::kLatentDecoder}) {
    GeneratorSpec g = make_generator(kind, 12, 4, 4, 5);
    for (std::uint64_t s = 0; s < 250; ++s) {
      Tensor img = image_for(g, s, p);
      for (double v : img.data) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
      }
    }
  }
}

TEST_CASE("latent_decoder equals decoder applied to the latent output") {
  GeneratorSpec g = make_generator(GeneratorKind::kLatentDecoder, 24, 5, 7, 13);
  PromptEmbedding p = embed_prompt("composition");
  Tensor eps_value = Tensor::vector(rng::normal_vector(24, 3));

  Tape t1;
  Tensor composed = generate(t1, g, t1.leaf(eps_value), p);

  Tape t2;
  Tensor latent = generate_latent(t2, g, t2.leaf(eps_value), p);
  Tensor decoded = decode_latent(t2, g, latent);

  CHECK(composed.data == decoded.data);
}

TEST_CASE("mean pixel responds to the noise for every kind") {
  PromptEmbedding p = embed_prompt("sensitivity");
  for (GeneratorKind kind : {GeneratorKind::kMlp, GeneratorKind::kColorField,
                             GeneratorKind::kLinear, GeneratorKind::kLatentDecoder}) {
    GeneratorSpec g = make_generator(kind, 16, 6, 6, 21);
    Tape tape;
    Tensor eps = tape.leaf(Tensor::vector(rng::normal_vector(16, 77)));
    Tensor mean_pixel = tape.mean(generate(tape, g, eps, p));
    Gradients grads = tape.backward(mean_pixel);
    double norm = 0.0;
    for (double v : grads.wrt(eps).data) norm += v * v;
    CHECK(std::sqrt(norm) > 0.0);
  }
}

TEST_CASE("gradient of the mean pixel matches finite differences") {
  PromptEmbedding p = embed_prompt("fd");
  for (GeneratorKind kind : {GeneratorKind::kMlp, GeneratorKind::kColorField,
                             GeneratorKind::kLatentDecoder}) {
    GeneratorSpec g = make_generator(kind, 12, 4, 4, 31);
    double err = ad::finite_diff_check(
        [&](Tape& t, const Tensor& eps) { return t.mean(generate(t, g, eps, p)); },
        testsupport::random_tensor({12}, 55), 1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("weights are frozen across optimization runs") {
  GeneratorSpec g = make_generator(GeneratorKind::kMlp, 16, 6, 6, 4);
  std::vector<std::uint8_t> before = serialize_generator(g);

  PromptEmbedding p = embed_prompt("frozen");
  CriterionSpec criterion = default_criterion();
  OptimizerConfig config;
  config.steps = 5;
  config.seed = 1;
  reno_run(g, p, criterion, config);
  config.seed = 2;
  reno_run(g, p, criterion, config);

  CHECK(serialize_generator(g) == before);
}

TEST_CASE("weight files round-trip bit-exactly") {
  TempDir dir("gen");
  GeneratorSpec g = make_generator(GeneratorKind::kLatentDecoder, 20, 4, 6, 99);
  std::string path = dir.file("weights.rnog");
  save_generator(g, path);
  GeneratorSpec loaded = load_generator(path);

  CHECK(loaded.kind == g.kind);
  CHECK(loaded.noise_dim == g.noise_dim);
  CHECK(loaded.height == g.height);
  CHECK(loaded.width == g.width);
  CHECK(loaded.weight_seed == g.weight_seed);
  CHECK(serialize_generator(loaded) == serialize_generator(g));

  PromptEmbedding p = embed_prompt("roundtrip");
  CHECK(image_for(loaded, 17, p).data == image_for(g, 17, p).data);
}

TEST_CASE("malformed weight files are rejected") {
  TempDir dir("gen_bad");
  std::string path = dir.file("weights.rnog");
  testsupport::spit(path, "not a weights file");
  CHECK_THROWS_AS(load_generator(path), IoError);

  GeneratorSpec g = make_generator(GeneratorKind::kLinear, 4, 2, 2, 1);
  std::vector<std::uint8_t> bytes = serialize_generator(g);
  bytes.resize(bytes.size() / 2);  // truncate
  CHECK_THROWS_AS(deserialize_generator(bytes), IoError);
}

TEST_CASE("constructor contracts") {
  CHECK_THROWS_AS(parse_generator_kind("diffusion"), std::invalid_argument);
  CHECK_THROWS_AS(make_generator(GeneratorKind::kMlp, 1, 4, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_generator(GeneratorKind::kMlp, 8, 0, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(embed_prompt("x", 0), std::invalid_argument);

  GeneratorSpec g = make_generator(GeneratorKind::kMlp, 8, 4, 4, 0);
  PromptEmbedding p = embed_prompt("dims");
  Tape tape;
  Tensor wrong = tape.leaf(Tensor::vector({1.0, 2.0}));
  CHECK_THROWS_AS(generate(tape, g, wrong, p), ShapeError);
  CHECK_THROWS_AS(generate_latent(tape, g, wrong, p), std::invalid_argument);
}

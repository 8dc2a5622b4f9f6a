#include "reno/generator.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "reno/errors.hpp"
#include "reno/rng.hpp"

namespace reno {

namespace {

constexpr std::uint64_t kPromptSalt = 0x52656e6f50726f6dULL;
constexpr std::size_t kMlpHidden = 64;

std::uint64_t weight_stream_seed(std::uint64_t weight_seed, const std::string& name) {
  return weight_seed ^ rng::fnv1a64(name);
}

ad::Tensor gaussian_matrix(std::uint64_t weight_seed, const std::string& name, std::size_t rows,
                           std::size_t cols, double scale) {
  rng::GaussianStream stream(weight_stream_seed(weight_seed, name));
  std::vector<double> data(rows * cols);
  for (double& v : data) v = scale * stream.next();
  return ad::Tensor({rows, cols}, std::move(data));
}

ad::Tensor gaussian_vector_t(std::uint64_t weight_seed, const std::string& name, std::size_t n,
                             double scale) {
  rng::GaussianStream stream(weight_stream_seed(weight_seed, name));
  std::vector<double> data(n);
  for (double& v : data) v = scale * stream.next();
  return ad::Tensor({n}, std::move(data));
}

// Dense smooth basis over pixel coordinates: each noise (or prompt) coordinate
// drives a planar cosine wave with its own frequency, phase and per-channel
// shift, so every output pixel depends on every input coordinate.
ad::Tensor wave_matrix(std::uint64_t weight_seed, const std::string& name, std::size_t height,
                       std::size_t width, std::size_t in_dim, double amplitude) {
  rng::GaussianStream stream(weight_stream_seed(weight_seed, name));
  const double two_pi = 2.0 * std::numbers::pi;
  struct Wave {
    double fu, fv, phase, chroma;
  };
  std::vector<Wave> waves(in_dim);
  for (Wave& wv : waves) {
    wv.fu = 0.5 + 2.0 * stream.uniform01();
    wv.fv = 0.5 + 2.0 * stream.uniform01();
    wv.phase = two_pi * stream.uniform01();
    wv.chroma = stream.uniform01();
  }
  std::size_t out_dim = height * width * 3;
  double scale = amplitude / std::sqrt(static_cast<double>(in_dim));
  std::vector<double> data(out_dim * in_dim);
  for (std::size_t i = 0; i < height; ++i) {
    double u = (static_cast<double>(i) + 0.5) / static_cast<double>(height);
    for (std::size_t j = 0; j < width; ++j) {
      double v = (static_cast<double>(j) + 0.5) / static_cast<double>(width);
      for (std::size_t c = 0; c < 3; ++c) {
        std::size_t row = (i * width + j) * 3 + c;
        for (std::size_t k = 0; k < in_dim; ++k) {
          const Wave& wv = waves[k];
          double arg = two_pi * (wv.fu * u + wv.fv * v) + wv.phase +
                       two_pi * wv.chroma * static_cast<double>(c) / 3.0;
          data[row * in_dim + k] = scale * std::cos(arg);
        }
      }
    }
  }
  return ad::Tensor({out_dim, in_dim}, std::move(data));
}

// Output projection with spatial coherence: each hidden unit drives a smooth
// planar wave over the image plus a small unstructured component. Purely
// i.i.d. rows would give neighboring pixels independent weights and make
// low-frequency image structure nearly unreachable from the noise.
ad::Tensor structured_output_matrix(std::uint64_t weight_seed, const std::string& name,
                                    std::size_t height, std::size_t width, std::size_t in_dim,
                                    double wave_amp, double noise_amp) {
  ad::Tensor waves = wave_matrix(weight_seed, name + "_wave", height, width, in_dim, wave_amp);
  ad::Tensor noise = gaussian_matrix(weight_seed, name + "_noise", waves.shape[0], in_dim,
                                     noise_amp / std::sqrt(static_cast<double>(in_dim)));
  for (std::size_t i = 0; i < waves.data.size(); ++i) waves.data[i] += noise.data[i];
  return waves;
}

// b + P * e, evaluated off-tape (constant w.r.t. the noise).
ad::Tensor conditioned_bias(const ad::Tensor& bias, const ad::Tensor& prompt_proj,
                            const PromptEmbedding& p) {
  std::size_t rows = prompt_proj.shape[0], cols = prompt_proj.shape[1];
  std::vector<double> out(bias.data);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = prompt_proj.data.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * p.vector[j];
    out[i] += acc;
  }
  return ad::Tensor(bias.shape, std::move(out));
}

void require_generate_dims(const GeneratorSpec& g, const ad::Tensor& eps,
                           const PromptEmbedding& p) {
  if (eps.size() != g.noise_dim) {
    throw ShapeError("generate: noise has dim " + std::to_string(eps.size()) +
                     ", generator expects " + std::to_string(g.noise_dim));
  }
  if (p.vector.size() != g.prompt_dim) {
    throw ShapeError("generate: prompt embedding has dim " + std::to_string(p.vector.size()) +
                     ", generator expects " + std::to_string(g.prompt_dim));
  }
}

ad::Tensor squash_to_image(ad::Tape& tape, const GeneratorSpec& g, const ad::Tensor& raw) {
  return tape.reshape(tape.sigmoid(raw), {g.height, g.width, 3});
}

std::size_t latent_dim_for(std::size_t noise_dim) {
  return std::max<std::size_t>(8, noise_dim / 4);
}

}  // namespace

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "linear") return GeneratorKind::kLinear;
  if (name == "mlp") return GeneratorKind::kMlp;
  if (name == "colorfield") return GeneratorKind::kColorField;
  if (name == "latent_decoder") return GeneratorKind::kLatentDecoder;
  throw std::invalid_argument("unsupported generator kind: " + name);
}

const char* generator_kind_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kLinear: return "linear";
    case GeneratorKind::kMlp: return "mlp";
    case GeneratorKind::kColorField: return "colorfield";
    case GeneratorKind::kLatentDecoder: return "latent_decoder";
  }
  return "?";
}

double NoiseVector::norm() const {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return std::sqrt(acc);
}

const ad::Tensor& GeneratorSpec::weight(const std::string& name) const {
  for (const auto& [key, tensor] : weights) {
    if (key == name) return tensor;
  }
  throw std::invalid_argument("generator has no weight named " + name);
}

GeneratorSpec make_generator(GeneratorKind kind, std::size_t noise_dim, std::size_t height,
                             std::size_t width, std::uint64_t weight_seed) {
  if (noise_dim < 2) throw std::invalid_argument("make_generator: noise_dim must be >= 2");
  if (height < 1 || width < 1) {
    throw std::invalid_argument("make_generator: image dimensions must be >= 1");
  }

  GeneratorSpec g;
  g.kind = kind;
  g.noise_dim = noise_dim;
  g.height = height;
  g.width = width;
  g.prompt_dim = kPromptDim;
  g.weight_seed = weight_seed;

  std::size_t out = g.pixel_count();
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(noise_dim));
  double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(kPromptDim));

  switch (kind) {
    case GeneratorKind::kLinear: {
      g.weights.emplace_back("w", gaussian_matrix(weight_seed, "w", out, noise_dim,
                                                  2.0 * inv_sqrt_d));
      g.weights.emplace_back("b", gaussian_vector_t(weight_seed, "b", out, 0.3));
      g.weights.emplace_back("p", gaussian_matrix(weight_seed, "p", out, kPromptDim,
                                                  0.5 * inv_sqrt_p));
      break;
    }
    case GeneratorKind::kMlp: {
      double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(kMlpHidden));
      g.weights.emplace_back("w1", gaussian_matrix(weight_seed, "w1", kMlpHidden, noise_dim,
                                                   inv_sqrt_d));
      g.weights.emplace_back("b1", gaussian_vector_t(weight_seed, "b1", kMlpHidden, 0.2));
      g.weights.emplace_back("p1", gaussian_matrix(weight_seed, "p1", kMlpHidden, kPromptDim,
                                                   0.8 * inv_sqrt_p));
      g.weights.emplace_back("w2", gaussian_matrix(weight_seed, "w2", kMlpHidden, kMlpHidden,
                                                   1.4 * inv_sqrt_h));
      g.weights.emplace_back("b2", gaussian_vector_t(weight_seed, "b2", kMlpHidden, 0.2));
      g.weights.emplace_back("w3", structured_output_matrix(weight_seed, "w3", height, width,
                                                            kMlpHidden, 2.2, 0.8));
      g.weights.emplace_back("b3", gaussian_vector_t(weight_seed, "b3", out, 0.3));
      break;
    }
    case GeneratorKind::kColorField: {
      g.weights.emplace_back("w", wave_matrix(weight_seed, "w", height, width, noise_dim, 3.0));
      g.weights.emplace_back("b", gaussian_vector_t(weight_seed, "b", out, 0.2));
      g.weights.emplace_back("p", wave_matrix(weight_seed, "p", height, width, kPromptDim, 0.8));
      break;
    }
    case GeneratorKind::kLatentDecoder: {
      std::size_t latent = latent_dim_for(noise_dim);
      double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(kMlpHidden));
      g.weights.emplace_back("enc_w1", gaussian_matrix(weight_seed, "enc_w1", kMlpHidden,
                                                       noise_dim, inv_sqrt_d));
      g.weights.emplace_back("enc_b1", gaussian_vector_t(weight_seed, "enc_b1", kMlpHidden, 0.2));
      g.weights.emplace_back("enc_p1", gaussian_matrix(weight_seed, "enc_p1", kMlpHidden,
                                                       kPromptDim, 0.8 * inv_sqrt_p));
      g.weights.emplace_back("enc_w2", gaussian_matrix(weight_seed, "enc_w2", latent, kMlpHidden,
                                                       1.4 * inv_sqrt_h));
      g.weights.emplace_back("enc_b2", gaussian_vector_t(weight_seed, "enc_b2", latent, 0.2));
      g.weights.emplace_back("dec_w", structured_output_matrix(weight_seed, "dec_w", height,
                                                               width, latent, 2.2, 0.8));
      g.weights.emplace_back("dec_b", gaussian_vector_t(weight_seed, "dec_b", out, 0.3));
      break;
    }
  }
  return g;
}

PromptEmbedding embed_prompt(const std::string& text, std::size_t d_p) {
  if (d_p < 1) throw std::invalid_argument("embed_prompt: d_p must be >= 1");
  std::vector<double> vec = rng::normal_vector(d_p, rng::fnv1a64(text) ^ kPromptSalt);
  double norm = 0.0;
  for (double v : vec) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    vec[0] = 1.0;
  } else {
    for (double& v : vec) v /= norm;
  }
  return PromptEmbedding{std::move(vec), text};
}

ad::Tensor generate(ad::Tape& tape, const GeneratorSpec& g, const ad::Tensor& eps,
                    const PromptEmbedding& p) {
  require_generate_dims(g, eps, p);
  switch (g.kind) {
    case GeneratorKind::kLinear:
    case GeneratorKind::kColorField: {
      ad::Tensor bias = conditioned_bias(g.weight("b"), g.weight("p"), p);
      ad::Tensor raw = tape.add(tape.matvec(g.weight("w"), eps), bias);
      return squash_to_image(tape, g, raw);
    }
    case GeneratorKind::kMlp: {
      ad::Tensor bias1 = conditioned_bias(g.weight("b1"), g.weight("p1"), p);
      ad::Tensor h1 = tape.tanh(tape.add(tape.matvec(g.weight("w1"), eps), bias1));
      ad::Tensor h2 = tape.tanh(tape.add(tape.matvec(g.weight("w2"), h1), g.weight("b2")));
      ad::Tensor raw = tape.add(tape.matvec(g.weight("w3"), h2), g.weight("b3"));
      return squash_to_image(tape, g, raw);
    }
    case GeneratorKind::kLatentDecoder: {
      return decode_latent(tape, g, generate_latent(tape, g, eps, p));
    }
  }
  throw std::invalid_argument("generate: unsupported generator kind");
}

ad::Tensor generate_latent(ad::Tape& tape, const GeneratorSpec& g, const ad::Tensor& eps,
                           const PromptEmbedding& p) {
  if (g.kind != GeneratorKind::kLatentDecoder) {
    throw std::invalid_argument("generate_latent: generator is not latent_decoder kind");
  }
  require_generate_dims(g, eps, p);
  ad::Tensor bias1 = conditioned_bias(g.weight("enc_b1"), g.weight("enc_p1"), p);
  ad::Tensor h1 = tape.tanh(tape.add(tape.matvec(g.weight("enc_w1"), eps), bias1));
  return tape.tanh(tape.add(tape.matvec(g.weight("enc_w2"), h1), g.weight("enc_b2")));
}

ad::Tensor decode_latent(ad::Tape& tape, const GeneratorSpec& g, const ad::Tensor& latent) {
  if (g.kind != GeneratorKind::kLatentDecoder) {
    throw std::invalid_argument("decode_latent: generator is not latent_decoder kind");
  }
  ad::Tensor raw = tape.add(tape.matvec(g.weight("dec_w"), latent), g.weight("dec_b"));
  return squash_to_image(tape, g, raw);
}

namespace {

constexpr char kMagic[4] = {'R', 'N', 'O', 'G'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError("generator file truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_generator(const GeneratorSpec& g) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(g.kind));
  put_u64(out, g.noise_dim);
  put_u64(out, g.height);
  put_u64(out, g.width);
  put_u64(out, g.prompt_dim);
  put_u64(out, g.weight_seed);
  put_u64(out, g.weights.size());
  for (const auto& [name, tensor] : g.weights) {
    put_u64(out, name.size());
    out.insert(out.end(), name.begin(), name.end());
    put_u64(out, tensor.shape.size());
    for (std::size_t d : tensor.shape) put_u64(out, d);
    for (double v : tensor.data) put_f64(out, v);
  }
  return out;
}

GeneratorSpec deserialize_generator(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(4) != std::string(kMagic, 4)) throw IoError("generator file: bad magic");
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw IoError("generator file: unsupported version " + std::to_string(version));
  }
  GeneratorSpec g;
  std::uint32_t kind = r.u32();
  if (kind > static_cast<std::uint32_t>(GeneratorKind::kLatentDecoder)) {
    throw IoError("generator file: unknown kind " + std::to_string(kind));
  }
  g.kind = static_cast<GeneratorKind>(kind);
  g.noise_dim = r.u64();
  g.height = r.u64();
  g.width = r.u64();
  g.prompt_dim = r.u64();
  g.weight_seed = r.u64();
  std::uint64_t n_weights = r.u64();
  for (std::uint64_t i = 0; i < n_weights; ++i) {
    std::string name = r.str(r.u64());
    std::uint64_t ndim = r.u64();
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = r.u64();
    std::vector<double> data(ad::shape_product(shape));
    for (double& v : data) v = r.f64();
    g.weights.emplace_back(std::move(name), ad::Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw IoError("generator file: trailing bytes");
  return g;
}

void save_generator(const GeneratorSpec& g, const std::string& path) {
  std::vector<std::uint8_t> bytes = serialize_generator(g);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

GeneratorSpec load_generator(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_generator(bytes);
}

}  // namespace reno

#include "mwgan/nn.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mwgan {

NodePtr ModelParams::add(const std::string& name, Tensor init) {
  Param p;
  p.name = name;
  p.node = make_leaf(std::move(init), "param");
  p.adam_m = Tensor(p.node->value.shape);
  p.adam_v = Tensor(p.node->value.shape);
  items.push_back(std::move(p));
  return items.back().node;
}

std::size_t ModelParams::total_count() const {
  std::size_t n = 0;
  for (const Param& p : items) n += p.node->value.size();
  return n;
}

real ModelParams::max_abs() const {
  real m = 0;
  for (const Param& p : items) {
    for (real v : p.node->value.data) m = std::max(m, std::fabs(v));
  }
  return m;
}

void ModelParams::clip(real tau) {
  for (Param& p : items) clip_tensor(p.node->value, tau);
}

void ModelParams::fill_uniform(real bound, Rng& rng) {
  for (Param& p : items) {
    for (real& v : p.node->value.data) {
      v = static_cast<real>(rng.uniform(-bound, bound));
    }
  }
}

std::vector<std::size_t> head_widths(std::size_t seq_len) {
  std::vector<std::size_t> widths{seq_len};
  while (widths.back() > 1) {
    widths.push_back((widths.back() + 1) / 2);
  }
  return widths;
}

namespace {

Tensor zeros(Shape s) { return Tensor(std::move(s)); }

NodePtr find_node(const ModelParams& params, const std::string& name) {
  for (const Param& p : params.items) {
    if (p.name == name) return p.node;
  }
  throw std::logic_error("parameter not found: " + name);
}

}  // namespace

CriticNet CriticNet::make(const NetConfig& cfg, real init_bound, Rng& rng) {
  if (cfg.seq_len == 0 || cfg.alphabet == 0 || cfg.channels == 0 || cfg.kernel == 0) {
    throw std::invalid_argument("CriticNet: seq_len, alphabet, channels, kernel must be positive");
  }
  CriticNet net;
  net.cfg = cfg;
  net.params.add("conv1/w", zeros({cfg.channels, cfg.alphabet, cfg.kernel}));
  net.params.add("conv1/b", zeros({cfg.channels}));
  net.params.add("conv2/w", zeros({1, cfg.channels, cfg.kernel}));
  net.params.add("conv2/b", zeros({1}));
  const auto widths = head_widths(cfg.seq_len);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::string tag = "head" + std::to_string(i);
    net.params.add(tag + "/w", zeros({widths[i], widths[i + 1]}));
    net.params.add(tag + "/b", zeros({widths[i + 1]}));
  }
  net.params.fill_uniform(init_bound, rng);
  return net;
}

NodePtr CriticNet::forward(const NodePtr& batch, bool train, Rng& rng) const {
  const Tensor& bv = batch->value;
  if (bv.rank() != 3 || bv.shape[1] != cfg.seq_len || bv.shape[2] != cfg.alphabet) {
    throw std::invalid_argument("critic_forward: batch shape " + shape_str(bv.shape) +
                                " does not match net (l=" + std::to_string(cfg.seq_len) +
                                ", u=" + std::to_string(cfg.alphabet) + ")");
  }
  const std::size_t b = bv.shape[0];
  NodePtr h = conv1d(batch, find_node(params, "conv1/w"), find_node(params, "conv1/b"));
  h = leaky_relu(h, cfg.lrelu_slope);
  h = dropout(h, cfg.dropout_rate, rng, train);
  h = conv1d(h, find_node(params, "conv2/w"), find_node(params, "conv2/b"));
  h = dropout(h, cfg.dropout_rate, rng, train);
  h = reshape(h, {b, cfg.seq_len});

  const auto widths = head_widths(cfg.seq_len);
  const std::size_t n_layers = widths.size() - 1;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const std::string tag = "head" + std::to_string(i);
    h = add(matmul(h, find_node(params, tag + "/w")), find_node(params, tag + "/b"));
    h = leaky_relu(h, cfg.lrelu_slope);
    if (i + 1 < n_layers) h = dropout(h, cfg.dropout_rate, rng, train);
  }
  return reshape(h, {b});
}

NodePtr CriticNet::forward(const Tensor& batch, bool train, Rng& rng) const {
  return forward(make_leaf(batch, "input"), train, rng);
}

GeneratorNet GeneratorNet::make(const NetConfig& cfg, real init_bound, Rng& rng) {
  if (cfg.seq_len == 0 || cfg.alphabet == 0 || cfg.channels == 0 || cfg.kernel == 0 ||
      cfg.noise_dim == 0) {
    throw std::invalid_argument("GeneratorNet: all dimensions must be positive");
  }
  GeneratorNet net;
  net.cfg = cfg;
  net.params.add("inflate/w", zeros({cfg.noise_dim, cfg.seq_len * cfg.alphabet}));
  net.params.add("inflate/b", zeros({cfg.seq_len * cfg.alphabet}));
  net.params.add("conv1/w", zeros({cfg.channels, cfg.alphabet, cfg.kernel}));
  net.params.add("conv1/b", zeros({cfg.channels}));
  net.params.add("conv2/w", zeros({cfg.alphabet, cfg.channels, cfg.kernel}));
  net.params.add("conv2/b", zeros({cfg.alphabet}));
  net.params.fill_uniform(init_bound, rng);
  return net;
}

NodePtr GeneratorNet::forward(const NodePtr& noise, bool train, Rng& rng) const {
  const Tensor& nv = noise->value;
  if (nv.rank() != 2 || nv.shape[1] != cfg.noise_dim) {
    throw std::invalid_argument("generator_forward: noise shape " + shape_str(nv.shape) +
                                " does not match y=" + std::to_string(cfg.noise_dim));
  }
  const std::size_t b = nv.shape[0];
  NodePtr h = add(matmul(noise, find_node(params, "inflate/w")), find_node(params, "inflate/b"));
  h = leaky_relu(h, cfg.lrelu_slope);
  h = dropout(h, cfg.dropout_rate, rng, train);
  h = reshape(h, {b, cfg.seq_len, cfg.alphabet});
  h = conv1d(h, find_node(params, "conv1/w"), find_node(params, "conv1/b"));
  h = leaky_relu(h, cfg.lrelu_slope);
  h = dropout(h, cfg.dropout_rate, rng, train);
  h = conv1d(h, find_node(params, "conv2/w"), find_node(params, "conv2/b"));
  h = leaky_relu(h, cfg.lrelu_slope);
  return softmax_axis(h, 2);
}

NodePtr GeneratorNet::forward(const Tensor& noise, bool train, Rng& rng) const {
  return forward(make_leaf(noise, "noise"), train, rng);
}

Tensor sample_noise(std::size_t b, std::size_t y, Rng& rng) {
  if (b == 0 || y == 0) throw std::invalid_argument("sample_noise: b and y must be >= 1");
  Tensor t({b, y});
  for (real& v : t.data) v = static_cast<real>(rng.normal());
  return t;
}

std::size_t critic_param_count(const NetConfig& cfg) {
  std::size_t n = cfg.channels * cfg.alphabet * cfg.kernel + cfg.channels;  // conv1
  n += cfg.channels * cfg.kernel + 1;                                       // conv2
  const auto widths = head_widths(cfg.seq_len);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    n += widths[i] * widths[i + 1] + widths[i + 1];
  }
  return n;
}

std::size_t generator_param_count(const NetConfig& cfg) {
  std::size_t n = cfg.noise_dim * cfg.seq_len * cfg.alphabet + cfg.seq_len * cfg.alphabet;
  n += cfg.channels * cfg.alphabet * cfg.kernel + cfg.channels;
  n += cfg.alphabet * cfg.channels * cfg.kernel + cfg.alphabet;
  return n;
}

// ---------------------------------------------------------------------------
// Checkpoint io. Format: magic, u32 version, config echo as length-prefixed
// key=value lines, then named tensors with shapes and raw 64-bit payloads.

namespace {

constexpr char kMagic[8] = {'M', 'W', 'G', 'A', 'N', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const auto n = read_pod<std::uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(os, kVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(config.size()));
  for (const auto& [k, v] : config) {
    write_string(os, k);
    write_string(os, v);
  }
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_string(os, name);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) write_pod<std::uint64_t>(os, d);
    for (real v : t.data) {
      const double d = static_cast<double>(v);
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof(bits));
      write_pod<std::uint64_t>(os, bits);
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n_cfg = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_cfg; ++i) {
    std::string k = read_string(is);
    std::string v = read_string(is);
    ckpt.config.emplace_back(std::move(k), std::move(v));
  }
  const auto n_tensors = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = read_string(is);
    const auto rank = read_pod<std::uint32_t>(is);
    Shape shape(rank);
    for (auto& d : shape) d = read_pod<std::uint64_t>(is);
    Tensor t(shape);
    for (real& v : t.data) {
      const auto bits = read_pod<std::uint64_t>(is);
      double d;
      std::memcpy(&d, &bits, sizeof(d));
      v = static_cast<real>(d);
    }
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

const std::string* Checkpoint::find(const std::string& key) const {
  for (const auto& [k, v] : config) {
    if (k == key) return &v;
  }
  return nullptr;
}

Checkpoint make_checkpoint(const CriticNet& critic, const GeneratorNet& gen,
                           std::vector<std::pair<std::string, std::string>> extra_config) {
  Checkpoint ckpt;
  ckpt.config = std::move(extra_config);
  for (const Param& p : critic.params.items) {
    ckpt.tensors.emplace_back("critic/" + p.name, p.node->value);
  }
  for (const Param& p : gen.params.items) {
    ckpt.tensors.emplace_back("gen/" + p.name, p.node->value);
  }
  return ckpt;
}

void restore_params(ModelParams& params, const Checkpoint& ckpt, const std::string& prefix) {
  for (Param& p : params.items) {
    const std::string want = prefix + p.name;
    bool found = false;
    for (const auto& [name, t] : ckpt.tensors) {
      if (name != want) continue;
      if (t.shape != p.node->value.shape) {
        throw std::runtime_error("checkpoint: tensor " + name + " has shape " +
                                 shape_str(t.shape) + ", expected " +
                                 shape_str(p.node->value.shape));
      }
      p.node->value = t;
      found = true;
      break;
    }
    if (!found) throw std::runtime_error("checkpoint: missing tensor " + want);
  }
}

}  // namespace mwgan

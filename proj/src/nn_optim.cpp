#include "pushnet/nn/optim.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace pushnet::nn {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

constexpr char kMagic[8] = {'P', 'U', 'S', 'H', 'N', 'E', 'T', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename V>
void put(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::istream& in) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) fail(ErrorKind::Format, "checkpoint: truncated file");
  return v;
}

void put_floats(std::ostream& out, const std::vector<float>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void get_floats(std::istream& in, std::vector<float>& v) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!in) fail(ErrorKind::Format, "checkpoint: truncated blob");
}

std::string get_string(std::istream& in, std::uint64_t max_len) {
  const auto len = get<std::uint64_t>(in);
  if (len > max_len) fail(ErrorKind::Format, "checkpoint: implausible string length");
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) fail(ErrorKind::Format, "checkpoint: truncated string");
  return s;
}

nlohmann::json read_header(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) fail(ErrorKind::Format, "checkpoint: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) fail(ErrorKind::Format, "checkpoint: unsupported version " + std::to_string(version));
  try {
    return nlohmann::json::parse(get_string(in, 1u << 26));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("checkpoint config: ") + e.what());
  }
}

}  // namespace

AdamState make_adam(const ParamStore<float>& params, double lr) {
  AdamState s;
  s.lr = lr;
  for (size_t i = 0; i < params.size(); ++i) {
    s.m.emplace_back(params[i].value.size(), 0.0f);
    s.v.emplace_back(params[i].value.size(), 0.0f);
  }
  return s;
}

void adam_step(ParamStore<float>& params, AdamState& state) {
  if (state.m.size() != params.size()) fail(ErrorKind::InvalidArgument, "adam: state does not match parameters");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const float b1 = static_cast<float>(state.beta1), b2 = static_cast<float>(state.beta2);
  const float step_size = static_cast<float>(state.lr / bc1);
  const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
  const float eps = static_cast<float>(state.eps);
  for (size_t k = 0; k < params.size(); ++k) {
    auto& w = params[k].value.values();
    const auto& g = params[k].grad.values();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != w.size()) fail(ErrorKind::InvalidArgument, "adam: moment size mismatch");
    for (size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      w[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + eps);
    }
  }
}

void save_checkpoint(const std::string& path, const ParamStore<float>& params, const AdamState* adam,
                     const nlohmann::json& config) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write checkpoint " + path);
    out.write(kMagic, 8);
    put<std::uint32_t>(out, kVersion);
    const std::string cfg = config.dump();
    put<std::uint64_t>(out, cfg.size());
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (size_t i = 0; i < params.size(); ++i) {
      const Parameter<float>& p = params[i];
      put<std::uint64_t>(out, p.name.size());
      out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rank()));
      for (int d : p.value.shape()) put<std::int32_t>(out, d);
      put<std::uint8_t>(out, p.decay ? 1 : 0);
      put_floats(out, p.value.values());
    }
    put<std::uint8_t>(out, adam ? 1 : 0);
    if (adam) {
      put<std::int64_t>(out, adam->step);
      put<double>(out, adam->lr);
      put<double>(out, adam->beta1);
      put<double>(out, adam->beta2);
      put<double>(out, adam->eps);
      for (size_t i = 0; i < params.size(); ++i) {
        put_floats(out, adam->m[i]);
        put_floats(out, adam->v[i]);
      }
    }
    if (!out) fail(ErrorKind::Io, "write failed: " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) fail(ErrorKind::Io, "cannot move checkpoint into " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path, ParamStore<float>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path);
  LoadedCheckpoint out;
  out.config = read_header(in);
  const auto count = get<std::uint32_t>(in);
  if (count != params.size())
    fail(ErrorKind::Format, "checkpoint: expected " + std::to_string(params.size()) + " parameters, found " +
                                std::to_string(count));
  std::vector<Parameter<float>*> order;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = get_string(in, 4096);
    Parameter<float>* p = params.find(name);
    if (!p) fail(ErrorKind::Format, "checkpoint: unexpected parameter " + name);
    const auto rank = get<std::uint32_t>(in);
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < rank && d < 8; ++d) shape.push_back(get<std::int32_t>(in));
    if (shape != p->value.shape())
      fail(ErrorKind::Format, "checkpoint: shape mismatch for " + name + ": file " + shape_string(shape) +
                                  " vs model " + shape_string(p->value.shape()));
    p->decay = get<std::uint8_t>(in) != 0;
    get_floats(in, p->value.values());
    order.push_back(p);
  }
  out.has_adam = get<std::uint8_t>(in) != 0;
  if (out.has_adam) {
    out.adam.step = get<std::int64_t>(in);
    out.adam.lr = get<double>(in);
    out.adam.beta1 = get<double>(in);
    out.adam.beta2 = get<double>(in);
    out.adam.eps = get<double>(in);
    // Moments are stored in file order; map them back to store order.
    std::vector<std::vector<float>> m(params.size()), v(params.size());
    for (Parameter<float>* p : order) {
      size_t idx = 0;
      while (&params[idx] != p) ++idx;
      m[idx].resize(p->value.size());
      v[idx].resize(p->value.size());
      get_floats(in, m[idx]);
      get_floats(in, v[idx]);
    }
    out.adam.m = std::move(m);
    out.adam.v = std::move(v);
  }
  return out;
}

nlohmann::json read_checkpoint_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path);
  return read_header(in);
}

}  // namespace pushnet::nn

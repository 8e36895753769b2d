#include "gmvae/model_io.hpp"

#include <map>

#include "gmvae/binio.hpp"
#include "gmvae/error.hpp"

namespace gmvae {
namespace {

void put_section(binio::Writer& w, const std::string& name, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.bytes(name);
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
  for (double v : t.values()) w.f32(static_cast<float>(v));
}

Tensor vec(std::span<const double> v) {
  return Tensor({v.size()}, std::vector<double>(v.begin(), v.end()));
}

[[noreturn]] void malformed(const std::string& what) {
  throw FormatError(FormatErrorKind::Malformed, "GMVM: " + what);
}

using SectionMap = std::map<std::string, Tensor, std::less<>>;

const Tensor& section(const SectionMap& s, const std::string& name) {
  auto it = s.find(name);
  if (it == s.end()) malformed("missing section '" + name + "'");
  return it->second;
}

ParamSet read_params(const SectionMap& s, const std::string& prefix, std::size_t layers) {
  ParamSet p;
  for (std::size_t i = 0; i < layers; ++i) {
    for (const char* kind : {"w", "b"}) {
      const std::string n = kind + std::to_string(i);
      const Tensor& t = section(s, prefix + n);
      if (t.rank() != 2) malformed("section '" + prefix + n + "' must be rank 2");
      p.add(n, t);
    }
  }
  return p;
}

std::size_t count_layers(const SectionMap& s, const std::string& prefix) {
  std::size_t n = 0;
  while (s.count(prefix + "w" + std::to_string(n))) ++n;
  return n;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const GmvaeModel& model, const CondMlp* cond) {
  std::vector<std::pair<std::string, Tensor>> sections;
  for (const auto& p : model.encoder.params()) sections.emplace_back("encoder." + p.name, p.value);
  for (const auto& p : model.decoder.params()) sections.emplace_back("decoder." + p.name, p.value);
  sections.emplace_back("gmm.pi_logits", model.prior.at("pi_logits").value);
  sections.emplace_back("gmm.mu", model.mu);
  sections.emplace_back("gmm.sigma2", model.sigma2);
  if (!model.layout.empty()) {
    const double dims[] = {static_cast<double>(model.layout.channels),
                           static_cast<double>(model.layout.height),
                           static_cast<double>(model.layout.width)};
    sections.emplace_back("data.layout", vec(dims));
    sections.emplace_back("data.mean", vec(model.layout.mean));
    sections.emplace_back("data.std", vec(model.layout.std));
  }
  if (cond) {
    for (const auto& p : cond->net.params()) sections.emplace_back("cond." + p.name, p.value);
    const double norm[] = {cond->re_mean, cond->re_std, cond->re_min, cond->re_max};
    sections.emplace_back("cond.norm", vec(norm));
  }

  binio::Writer w;
  w.bytes("GMVM");
  w.u32(kGmvmVersion);
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, t] : sections) put_section(w, name, t);
  return std::move(w.buffer());
}

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes, "GMVM");
  if (r.remaining() < 4 || r.bytes(4) != "GMVM")
    throw FormatError(FormatErrorKind::BadMagic, "GMVM: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kGmvmVersion)
    throw FormatError(FormatErrorKind::VersionMismatch,
                      "GMVM: unsupported version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  SectionMap s;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = r.u32();
    std::string name = r.bytes(len);
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) malformed("section '" + name + "' has invalid rank");
    std::vector<std::size_t> shape;
    std::uint64_t total = 1;
    for (std::uint32_t q = 0; q < rank; ++q) {
      shape.push_back(r.u32());
      total *= shape.back();
    }
    r.need(static_cast<std::size_t>(4 * total));
    std::vector<double> data(static_cast<std::size_t>(total));
    for (double& v : data) v = r.f32();
    if (!s.emplace(std::move(name), Tensor(std::move(shape), std::move(data))).second)
      malformed("duplicate section");
  }
  if (r.remaining() != 0) malformed("trailing bytes after the last section");

  LoadedModel out;
  GmvaeModel& m = out.model;
  const std::size_t enc_layers = count_layers(s, "encoder.");
  const std::size_t dec_layers = count_layers(s, "decoder.");
  if (enc_layers == 0 || enc_layers != dec_layers) malformed("encoder/decoder depth mismatch");
  m.encoder = read_params(s, "encoder.", enc_layers);
  m.decoder = read_params(s, "decoder.", dec_layers);
  const Tensor& dlv = section(s, "decoder.log_var");
  if (dlv.size() != 1) malformed("decoder.log_var must be a scalar");
  m.decoder.add("log_var", dlv.reshaped({1, 1}));

  const Tensor& mu = section(s, "gmm.mu");
  if (mu.rank() != 2) malformed("gmm.mu must be rank 2");
  const std::size_t k = mu.rows(), d = mu.cols();
  const Tensor& logits = section(s, "gmm.pi_logits");
  const Tensor& sigma2 = section(s, "gmm.sigma2");
  if (logits.size() != k || sigma2.size() != k) malformed("gmm sections disagree on K");
  m.prior.add("pi_logits", logits.reshaped({1, k}));
  m.mu = mu;
  m.sigma2 = sigma2.reshaped({1, k});

  m.shape.input_dim = m.encoder.at("w0").value.rows();
  m.shape.latent_dim = d;
  m.shape.hidden.clear();
  for (std::size_t i = 0; i + 1 < enc_layers; ++i)
    m.shape.hidden.push_back(m.encoder.at("w" + std::to_string(i)).value.cols());
  // shape consistency of the whole chain
  std::size_t width = m.shape.input_dim;
  for (std::size_t i = 0; i < enc_layers; ++i) {
    const Tensor& w = m.encoder.at("w" + std::to_string(i)).value;
    const Tensor& b = m.encoder.at("b" + std::to_string(i)).value;
    if (w.rows() != width || b.cols() != w.cols() || b.rows() != 1) malformed("encoder shapes");
    width = w.cols();
  }
  if (width != 2 * d) malformed("encoder output width must be twice the latent width");
  width = d;
  for (std::size_t i = 0; i < dec_layers; ++i) {
    const Tensor& w = m.decoder.at("w" + std::to_string(i)).value;
    const Tensor& b = m.decoder.at("b" + std::to_string(i)).value;
    if (w.rows() != width || b.cols() != w.cols() || b.rows() != 1) malformed("decoder shapes");
    width = w.cols();
  }
  if (width != m.shape.input_dim) malformed("decoder output width must match the input");

  if (s.count("data.layout")) {
    const Tensor& lay = section(s, "data.layout");
    if (lay.size() != 3) malformed("data.layout must hold C, H, W");
    m.layout.channels = static_cast<std::size_t>(lay[0]);
    m.layout.height = static_cast<std::size_t>(lay[1]);
    m.layout.width = static_cast<std::size_t>(lay[2]);
    const Tensor& mean = section(s, "data.mean");
    const Tensor& sd = section(s, "data.std");
    if (mean.size() != m.layout.channels || sd.size() != m.layout.channels ||
        m.layout.channels * m.layout.pixels() != m.shape.input_dim)
      malformed("data layout disagrees with the network input width");
    m.layout.mean.assign(mean.values().begin(), mean.values().end());
    m.layout.std.assign(sd.values().begin(), sd.values().end());
  }

  if (s.count("cond.w0")) {
    CondMlp c;
    c.net = read_params(s, "cond.", count_layers(s, "cond."));
    const Tensor& norm = section(s, "cond.norm");
    if (norm.size() != 4) malformed("cond.norm must hold 4 values");
    c.re_mean = norm[0];
    c.re_std = norm[1];
    c.re_min = norm[2];
    c.re_max = norm[3];
    if (c.latent_dim() != d) malformed("conditional MLP output width must equal the latent width");
    out.cond = std::move(c);
  }
  return out;
}

void save_model(const std::filesystem::path& path, const GmvaeModel& model, const CondMlp* cond) {
  binio::write_file(path, serialize_model(model, cond));
}

LoadedModel load_model(const std::filesystem::path& path) {
  return deserialize_model(binio::read_file(path));
}

}  // namespace gmvae

#include "gmvae/embedding.hpp"

#include <algorithm>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "gmvae/error.hpp"
#include "gmvae/linalg.hpp"
#include "gmvae/trainer.hpp"

namespace gmvae {

Tensor pca_coordinates(const Tensor& latent) {
  const std::size_t n = latent.rows();
  Tensor pcs({n, 2}, 0.0);
  const std::size_t dims = std::min<std::size_t>({2, latent.cols(), n});
  if (n < 2 || dims == 0) return pcs;
  const auto res = pca(latent, dims);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dims; ++j) pcs(i, j) = res.projected(i, j);
  return pcs;
}

EmbeddingTable embed(const GmvaeModel& model, const FlowDataset& ds) {
  require(ds.sample_size() == model.shape.input_dim,
          "embed: dataset field size " + std::to_string(ds.sample_size()) +
              " does not match model input " + std::to_string(model.shape.input_dim));
  EmbeddingTable t;
  t.re = ds.re;
  const std::size_t d = model.latent_dim();
  if (ds.size() == 0) {
    t.latent = Tensor({0, d});
    t.pcs = Tensor({0, 2});
    return t;
  }
  const EncoderDist enc = encode_all(model, model.standardize(ds.matrix()));
  t.latent = enc.mean;
  t.pcs = pca_coordinates(t.latent);
  const Tensor gamma = responsibilities(model.gmm(), t.latent);
  t.cluster.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = gamma.row_span(i);
    t.cluster[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return t;
}

void write_embeddings_csv(std::ostream& os, const EmbeddingTable& t) {
  const std::size_t d = t.latent_dim();
  os << "id,re";
  for (std::size_t j = 0; j < d; ++j) os << ",z" << (j + 1);
  os << ",pc1,pc2,cluster\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << i << ',' << t.re[i];
    for (std::size_t j = 0; j < d; ++j) os << ',' << t.latent(i, j);
    os << ',' << t.pcs(i, 0) << ',' << t.pcs(i, 1) << ',' << t.cluster[i] << '\n';
  }
  os.precision(old);
}

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  require(it != header.end(), "CSV: no column named '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ContractError("CSV: cannot parse number '" + s + "'");
  return v;
}

}  // namespace

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "CSV: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size())
      throw ContractError("CSV: row " + std::to_string(t.rows.size() + 1) +
                          " has the wrong number of fields");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

EmbeddingTable embeddings_from_csv(const CsvTable& csv) {
  EmbeddingTable t;
  std::size_t d = 0;
  while (std::find(csv.header.begin(), csv.header.end(), "z" + std::to_string(d + 1)) !=
         csv.header.end())
    ++d;
  const std::size_t n = csv.rows.size();
  t.re = csv.values("re");
  t.latent = Tensor({n, d});
  t.pcs = Tensor({n, 2});
  const std::size_t pc1 = csv.column("pc1"), pc2 = csv.column("pc2"), cl = csv.column("cluster");
  std::vector<std::size_t> zc;
  for (std::size_t j = 0; j < d; ++j) zc.push_back(csv.column("z" + std::to_string(j + 1)));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = csv.rows[i];
    for (std::size_t j = 0; j < d; ++j) t.latent(i, j) = r[zc[j]];
    t.pcs(i, 0) = r[pc1];
    t.pcs(i, 1) = r[pc2];
    require(r[cl] >= 0, "CSV: negative cluster label");
    t.cluster.push_back(static_cast<std::size_t>(r[cl]));
  }
  return t;
}

}  // namespace gmvae

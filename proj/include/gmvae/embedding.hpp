#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "gmvae/flowgen.hpp"
#include "gmvae/model.hpp"
#include "gmvae/tensor.hpp"

namespace gmvae {

/// Per-sample analysis rows: id, re, latent mean, 2-D PCA coordinates and the
/// argmax-responsibility cluster at the posterior mean.
struct EmbeddingTable {
  std::vector<double> re;
  Tensor latent;  // N x D posterior means
  Tensor pcs;     // N x 2
  std::vector<std::size_t> cluster;

  std::size_t size() const { return re.size(); }
  std::size_t latent_dim() const { return latent.empty() ? 0 : latent.cols(); }
};

/// 2-D PCA coordinates of the latent means; dimensions PCA cannot supply
/// (D < 2 or N < 2) are zero.
Tensor pca_coordinates(const Tensor& latent);

EmbeddingTable embed(const GmvaeModel& model, const FlowDataset& ds);

/// CSV: id,re,z1..zD,pc1,pc2,cluster with round-trip (17 digit) precision.
void write_embeddings_csv(std::ostream& os, const EmbeddingTable& t);

/// Minimal numeric CSV: a header row and rows of doubles.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a header column; throws ContractError if absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

CsvTable read_csv(std::istream& is);
EmbeddingTable embeddings_from_csv(const CsvTable& csv);

}  // namespace gmvae

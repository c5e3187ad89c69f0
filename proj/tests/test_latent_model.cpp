#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "latis/copula_lab.hpp"
#include "latis/latent_model.hpp"

using namespace latis;

namespace {

Dataset chain_data(std::size_t rows) {
  const auto m = generate_copula(topology::chain(4), std::vector<Marginal>(4, Marginal::beta(2, 3)), 5);
  return sample(m, rows, 6);
}

}  // namespace

TEST(LatentModel, FitProducesOneMarginalPerEdge) {
  const auto data = chain_data(801);
  const auto m = fit_latent_model(topology::chain(4), data);
  EXPECT_EQ(m.num_nodes(), 4u);
  EXPECT_EQ(m.encoder_kind(), EncoderKind::Cdf);
  EXPECT_DOUBLE_EQ(m.alpha(), 1.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(m.ising().node_p1(i), 802.0 / 1602.0, 1e-14);
  for (std::size_t e = 0; e < 3; ++e) {
    const auto& pm = m.ising().edge_marginal(e);
    EXPECT_TRUE(pm.valid());
    EXPECT_EQ(pm.n_samples, 801u);
  }
  EXPECT_THROW(fit_latent_model(topology::chain(3), data), std::invalid_argument);
}

TEST(LatentModel, FitOptionsApply) {
  const auto data = chain_data(400);
  FitOptions opt;
  opt.encoder = EncoderKind::MedianStep;
  opt.alpha = 0.25;
  const auto m = fit_latent_model(topology::chain(4), data, opt);
  EXPECT_EQ(m.encoder_kind(), EncoderKind::MedianStep);
  EXPECT_DOUBLE_EQ(m.alpha(), 0.25);
  EXPECT_DOUBLE_EQ(m.with_alpha(0.5).alpha(), 0.5);
}

TEST(LatentModel, JsonRoundTrip) {
  const auto m = fit_latent_model(topology::chain(4), chain_data(300));
  const auto path = (std::filesystem::temp_directory_path() / "latis_model_roundtrip.json").string();
  save_latent_model(m.with_alpha(0.4), path);
  const auto back = load_latent_model(path);
  std::remove(path.c_str());
  EXPECT_DOUBLE_EQ(back.alpha(), 0.4);
  EXPECT_EQ(back.topology().edges(), m.topology().edges());
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back.encoder(i).p1(), m.encoder(i).p1());
    EXPECT_EQ(back.encoder(i).encode(0.3), m.encoder(i).encode(0.3));
  }
  for (std::size_t e = 0; e < 3; ++e)
    EXPECT_EQ(back.ising().edge_marginal(e).p11, m.ising().edge_marginal(e).p11);
  EXPECT_THROW(load_latent_model("/nonexistent/model.json"), std::runtime_error);
}

TEST(LatentModel, RejectsTamperedFile) {
  auto j = to_json(fit_latent_model(topology::chain(4), chain_data(200)));
  j["nodes"][1]["p1"] = 0.1;
  EXPECT_THROW(latent_model_from_json(j), std::runtime_error);
}

TEST(DatasetCsv, RoundTrip) {
  const auto d = chain_data(20);
  std::stringstream ss;
  write_dataset_csv(d, ss);
  const auto back = read_dataset_csv(ss);
  EXPECT_EQ(back.rows, 20u);
  EXPECT_EQ(back.cols, 4u);
  EXPECT_EQ(back.values, d.values);
}

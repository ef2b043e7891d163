// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>

#include "celebbasis/backends.hpp"
#include "celebbasis/embedding_dictionary.hpp"
#include "celebbasis/error.hpp"
#include "celebbasis/rng.hpp"
#include "support.hpp"

namespace celeb {
namespace {

TEST(SyntheticTextEncoder, TokenizerContract) {
  auto enc = synthetic_text_encoder(0, 16, 77);
  const auto ids = enc->tokenize("  Anna\tBERG  maximiliano ");
  ASSERT_EQ(ids.size(), 4u);
  EXPECT_EQ(ids[0], fnv1a64("anna"));
  EXPECT_EQ(ids[1], fnv1a64("berg"));
  EXPECT_EQ(ids[2], fnv1a64("maximili"));
  EXPECT_EQ(ids[3], fnv1a64("ano"));
  EXPECT_TRUE(enc->tokenize("   ").empty());
  EXPECT_EQ(enc->begin_token(), fnv1a64("<|startoftext|>"));
  EXPECT_EQ(enc->end_token(), fnv1a64("<|endoftext|>"));
}

TEST(SyntheticTextEncoder, DeterministicAcrossInstances) {
  const std::vector<TokenId> ids = {fnv1a64("anna"), fnv1a64("berg")};
  const Mat a = synthetic_text_encoder(5, 32, 77)->dictionary_embed(ids);
  const Mat b = synthetic_text_encoder(5, 32, 77)->dictionary_embed(ids);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, synthetic_text_encoder(6, 32, 77)->dictionary_embed(ids));
}

TEST(SyntheticTextEncoder, GoldenValues) {
  // Frozen outputs; a change here breaks every stored basis.
  const std::vector<TokenId> ids = {fnv1a64("anna")};
  const Mat e = synthetic_text_encoder(0, 8, 77)->dictionary_embed(ids);
  const double golden[3] = {-0.0029490826098507858, -0.015286619517883043, 0.0080743373263864378};
  for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(e(0, j), golden[j]);
}

TEST(SyntheticTextEncoder, EmbeddingScale) {
  auto enc = synthetic_text_encoder(1, 256, 77);
  std::vector<TokenId> ids;
  for (int i = 0; i < 200; ++i) ids.push_back(fnv1a64("tok" + std::to_string(i)));
  const Mat e = enc->dictionary_embed(ids);
  const double var = e.squaredNorm() / static_cast<double>(e.size());
  EXPECT_NEAR(std::sqrt(var), 0.02, 0.001);
}

TEST(SyntheticTextEncoder, NoCollisionsOnCorpus) {
  auto enc = synthetic_text_encoder(0, 8, 77);
  std::map<TokenId, std::string> seen;
  int collisions = 0;
  auto check = [&](const std::string& piece) {
    const auto ids = enc->tokenize(piece);
    ASSERT_EQ(ids.size(), 1u);
    auto [it, fresh] = seen.emplace(ids[0], piece);
    if (!fresh && it->second != piece) ++collisions;
  };
  for (int i = 0; i < 10000; ++i) check("t" + std::to_string(i));
  for (const char* file : {"celeb_names.txt", "celeb_names_1500.txt"}) {
    for (const auto& name : load_names(testing::fixture(file)).names) {
      std::string word;
      for (char c : name + " ") {
        if (c == ' ') {
          for (std::size_t at = 0; at < word.size(); at += 8) {
            std::string piece = word.substr(at, 8);
            for (auto& ch : piece) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            check(piece);
          }
          word.clear();
        } else {
          word.push_back(c);
        }
      }
    }
  }
  EXPECT_GT(seen.size(), 10000u);
  EXPECT_EQ(collisions, 0);
}

TEST(SyntheticTextEncoder, TransformAndVjp) {
  auto enc = synthetic_text_encoder(2, 12, 77);
  Rng rng(1);
  Mat seq(5, 12);
  for (Eigen::Index i = 0; i < seq.size(); ++i) seq.data()[i] = rng.normal();
  const Mat out = enc->transform(seq);
  EXPECT_EQ(out.rows(), 5);
  EXPECT_EQ(out.cols(), 12);
  Mat g(5, 12);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  const Mat vjp = enc->transform_vjp(seq, g);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const auto i = rng.uniform_int(0, 4), j = rng.uniform_int(0, 11);
    Mat up = seq, down = seq;
    up(i, j) += h;
    down(i, j) -= h;
    const double fd = ((enc->transform(up) - enc->transform(down)).cwiseProduct(g)).sum() / (2 * h);
    EXPECT_NEAR(vjp(i, j), fd, 1e-7);
  }
  EXPECT_THROW(enc->transform(Mat::Zero(2, 3)), AdapterError);
}

class ToyDenoiserTest : public ::testing::Test {
 protected:
  NoiseSchedule schedule = NoiseSchedule::linear();
  std::shared_ptr<ToyDenoiser> den = toy_denoiser(ToyDenoiserOptions{.seed = 3, .cond_dim = 16}, schedule);
  Latent zeros() { return Latent{4, 8, 8, Vec::Zero(256)}; }
};

TEST_F(ToyDenoiserTest, WellPosedAtZero) {
  const Latent a = den->predict_noise(zeros(), 500, Mat::Zero(3, 16));
  const Latent b = den->predict_noise(zeros(), 500, Mat::Zero(3, 16));
  EXPECT_TRUE(a.values.allFinite());
  EXPECT_EQ(a.values, b.values);
}

TEST_F(ToyDenoiserTest, DependsOnCondition) {
  Rng rng(2);
  Mat c(4, 16);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = 0.02 * rng.normal();
  Mat c2 = c;
  c2(1, 3) += 1e-3;
  const Latent z{4, 8, 8, rng.normal_vector(256)};
  EXPECT_GT((den->predict_noise(z, 300, c).values - den->predict_noise(z, 300, c2).values).norm(), 0.0);
}

TEST_F(ToyDenoiserTest, ConditionVjpMatchesFiniteDifferences) {
  Rng rng(4);
  Mat c(3, 16);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = 0.02 * rng.normal();
  const Latent z{4, 8, 8, rng.normal_vector(256)};
  const Vec g = rng.normal_vector(256);
  const int t = 400;
  const Mat vjp = den->condition_vjp(z, t, c, g);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 16; j += 5) {
      Mat up = c, down = c;
      up(i, j) += h;
      down(i, j) -= h;
      const double fd = (den->predict_noise(z, t, up).values - den->predict_noise(z, t, down).values).dot(g) / (2 * h);
      EXPECT_NEAR(vjp(i, j), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST_F(ToyDenoiserTest, FrozenUnlessUnlocked) {
  const Latent z{4, 8, 8, Vec::Ones(256)};
  auto digest = [&] {
    std::uint64_t h = 0;
    for (const auto& p : den->parameters()) h ^= fnv1a64(p.bytes, h + 1);
    return h;
  };
  const std::uint64_t before = digest();
  den->condition_vjp(z, 10, Mat::Zero(2, 16), Vec::Ones(256));
  EXPECT_EQ(digest(), before);
  den->set_trainable(true);
  den->condition_vjp(z, 10, Mat::Zero(2, 16), Vec::Ones(256));
  EXPECT_NE(digest(), before);
}

TEST(ToyCodec, ShapesAndConstantRoundTrip) {
  auto codec = toy_latent_codec();
  const Image gray(64, 64, 0.25f);
  const Latent z = codec->encode(gray);
  EXPECT_EQ(z.channels, 4);
  EXPECT_EQ(z.height, 8);
  EXPECT_EQ(z.width, 8);
  EXPECT_NEAR(z.values[0], -0.5, 1e-7);
  const Image back = codec->decode(z);
  EXPECT_EQ(back.width, 64);
  for (float v : back.pixels) EXPECT_NEAR(v, 0.25f, 1e-6f);
  EXPECT_THROW(codec->encode(Image()), AdapterError);
}

TEST(SyntheticFaceEncoder, ContentDeterminism) {
  auto enc = synthetic_face_encoder(0);
  const Image a = testing::test_face("alice");
  const Image a2 = testing::test_face("alice");
  const Vec fa = *enc->extract(a);
  EXPECT_EQ(fa, *enc->extract(a2));
  EXPECT_EQ(fa.size(), kFaceFeatureDim);
  EXPECT_NEAR(fa.norm(), 1.0, 1e-12);
  EXPECT_NE(fa, *enc->extract(testing::test_face("bob")));
  EXPECT_NE(fa, *synthetic_face_encoder(1)->extract(a));
}

TEST(MockDetector, Rules) {
  const Image dark(4, 4, 0.1f), light(4, 4, 0.9f);
  EXPECT_TRUE(mock_detector("always")->detect(dark));
  EXPECT_FALSE(mock_detector("never")->detect(light));
  EXPECT_TRUE(mock_detector("mean>=0.5")->detect(light));
  EXPECT_FALSE(mock_detector("mean>=0.5")->detect(dark));
  EXPECT_TRUE(mock_detector("hash%1")->detect(dark));
  EXPECT_THROW(mock_detector("sometimes"), UsageError);
  EXPECT_THROW(mock_detector("hash%0"), UsageError);
  EXPECT_THROW(mock_detector("mean>=x"), UsageError);
}

TEST(SyntheticSampler, DeterministicImages) {
  const Backends b = make_backends(BackendConfig{.dim = 16});
  Mat c = Mat::Zero(3, 16);
  SamplerParams params;
  params.steps = 6;
  const Image x = b.sampler->sample(c, 1, params);
  EXPECT_EQ(x, b.sampler->sample(c, 1, params));
  EXPECT_NE(x, b.sampler->sample(c, 2, params));
  EXPECT_EQ(x.width, 64);
  params.steps = 0;
  EXPECT_THROW(b.sampler->sample(c, 1, params), UsageError);
}

TEST(Registry, UnknownAdapterAndPlugins) {
  BackendConfig c;
  c.dim = 8;
  c.text_encoder = "no-such-encoder";
  EXPECT_THROW(make_backends(c), AdapterError);
  AdapterRegistry::instance().add_text_encoder("test-clip-wide", [](const BackendConfig& cfg) {
    return synthetic_text_encoder(cfg.encoder_seed, cfg.dim, 99);
  });
  c.text_encoder = "test-clip-wide";
  const Backends b = make_backends(c);
  EXPECT_EQ(b.text_encoder->max_length(), 99);
  const auto ids = b.identifiers();
  EXPECT_EQ(ids.at("denoiser"), "toy-denoiser");
  EXPECT_EQ(ids.at("face_detector"), "mock-detector:always");
  for (const auto& p : b.frozen_parameters()) EXPECT_FALSE(p.name.empty());
}

TEST(BackendConfig, JsonRoundTrip) {
  BackendConfig c;
  c.encoder_seed = 123456789012345ULL;
  c.detector = "mean>=0.3";
  c.dim = 64;
  const BackendConfig back = nlohmann::json(c).get<BackendConfig>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(c));
}

}  // namespace
}  // namespace celeb

// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails or overruns its time budget.

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "celebbasis_cli/cli.hpp"
#include "support.hpp"

namespace celeb {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt_num(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cli_run(const std::vector<std::string>& args, std::string* err = nullptr) {
  std::ostringstream out, errs;
  const int code = cli::run_cli(args, out, errs);
  if (err) *err = errs.str();
  if (code != 0) std::cerr << "  [cli] " << args.front() << ": " << errs.str();
  return code;
}

json read_json(const fs::path& p) {
  const Bytes b = read_file(p);
  return json::parse(b.begin(), b.end());
}

Mat random_rows(int m, int d, Rng& rng) {
  Mat x(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
  return x;
}

EmbeddingSet as_set(const Mat& rows, SlotRole role = SlotRole::kFirst, TokenId base = 1) {
  EmbeddingSet s;
  s.role = role;
  s.rows = rows;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) s.source_token_ids.push_back(base + static_cast<TokenId>(i));
  return s;
}

double orthonormality_error(const BasisComponent& c) {
  const Mat gram = c.directions * c.directions.transpose();
  return (gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

bool nonincreasing(const Vec& v) {
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

// Shared state built once, outside the per-criterion timers.
struct Setup {
  testing::TempDir dir;
  Backends backends;
  std::unique_ptr<CelebBasis> basis;  // fixture corpus, d = 768, p = 512
  std::string basis_path;
  std::vector<BasisComponent> random_components;

  Setup() {
    BackendConfig config;
    backends = make_backends(config);
    const DictionaryBuild dict = embed_names(load_names(testing::fixture("celeb_names.txt")), *backends.text_encoder);
    const auto [first, second] = build_sets(dict.pairs);
    basis = std::make_unique<CelebBasis>(build_basis(first, second, 512));
    basis_path = (dir / "basis.cbb").string();
    save_basis(*basis, basis_path);
  }
};

// --- criteria ---------------------------------------------------------------

Outcome pca_oracle(Setup& setup) {
  Outcome o;
  double worst_dir = 0.0, worst_var = 0.0;
  Rng shapes(2026);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = static_cast<int>(shapes.uniform_int(3, 100));
    const int d = static_cast<int>(shapes.uniform_int(2, 32));
    Rng rng(1000 + trial);
    const Mat x = random_rows(m, d, rng);
    const int p = std::min(m - 1, d);
    const BasisComponent c = compute_pca(as_set(x), p);
    setup.random_components.push_back(c);

    const Vec mean = x.colwise().mean().transpose();
    const Mat centered = x.rowwise() - mean.transpose();
    const Mat cov = centered.transpose() * centered / (m - 1);
    Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
    for (int k = 0; k < p; ++k) {
      const int col = d - 1 - k;
      Vec v = eig.eigenvectors().col(col);
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (v[arg] < 0) v = -v;
      worst_dir = std::max(worst_dir, (c.directions.row(k).transpose() - v).cwiseAbs().maxCoeff());
      const double ref = eig.eigenvalues()[col];
      worst_var = std::max(worst_var, std::abs(c.explained_variance[k] - ref) / std::abs(ref));
    }
  }
  o.require(worst_dir < 1e-5, "direction error " + fmt_num("%.3g", worst_dir));
  o.require(worst_var < 1e-6, "variance error " + fmt_num("%.3g", worst_var));
  o.detail = o.pass ? "max dir err " + fmt_num("%.2e", worst_dir) + ", max var rel err " + fmt_num("%.2e", worst_var) : o.detail;
  return o;
}

Outcome orthonormality(Setup& setup) {
  Outcome o;
  std::vector<const BasisComponent*> all;
  for (const auto& c : setup.random_components) all.push_back(&c);
  all.push_back(&setup.basis->first());
  all.push_back(&setup.basis->second());
  const CelebBasis loaded = load_basis(setup.basis_path);
  all.push_back(&loaded.first());
  all.push_back(&loaded.second());
  double worst = 0.0;
  for (const auto* c : all) {
    worst = std::max(worst, orthonormality_error(*c));
    o.require(nonincreasing(c->explained_variance), "variance not ordered");
  }
  o.require(worst < 1e-6, "orthonormality error " + fmt_num("%.3g", worst));
  if (o.pass) o.detail = std::to_string(all.size()) + " components, max |BB^T - I| " + fmt_num("%.2e", worst);
  return o;
}

Outcome round_trip(Setup&) {
  Outcome o;
  Rng rng(33);
  const int d = 32;
  const CelebBasis b = build_basis(as_set(random_rows(20, d, rng)),
                                   as_set(random_rows(20, d, rng), SlotRole::kSecond, 1000), 19);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    IdentityCoefficients c{rng.normal_vector(b.p()), rng.normal_vector(b.p())};
    const EmbeddingPair v = synthesize_embedding(b, c);
    const EmbeddingPair back = synthesize_embedding(b, project(b, v));
    worst = std::max(worst, (back.first - v.first).norm() / v.first.norm());
    worst = std::max(worst, (back.second - v.second).norm() / v.second.norm());
  }
  const EmbeddingPair zero = synthesize_embedding(b, {Vec::Zero(b.p()), Vec::Zero(b.p())});
  const double mean_err = std::max((zero.first - b.first().mean).cwiseAbs().maxCoeff(),
                                   (zero.second - b.second().mean).cwiseAbs().maxCoeff());
  o.require(worst < 1e-5, "round trip error " + fmt_num("%.3g", worst));
  o.require(mean_err < 1e-9 * d, "zero coefficients miss the mean by " + fmt_num("%.3g", mean_err));
  if (o.pass) o.detail = "max rel err " + fmt_num("%.2e", worst) + ", mean err " + fmt_num("%.1e", mean_err);
  return o;
}

Outcome storage(Setup& setup) {
  Outcome o;
  Rng rng(4);
  IdentityCheckpoint ck;
  ck.label = "ID";
  ck.basis_fingerprint = setup.basis->fingerprint();
  ck.coefficients.a1 = rng.normal_vector(512);
  ck.coefficients.a1 /= ck.coefficients.a1.norm();
  ck.coefficients.a2 = rng.normal_vector(512);
  ck.coefficients.a2 /= ck.coefficients.a2.norm();
  const fs::path path = setup.dir / "storage.celebid";
  save_identity(ck, path);
  const auto size = fs::file_size(path);
  const std::size_t payload = static_cast<std::size_t>(ck.coefficients.a1.size() + ck.coefficients.a2.size()) * 2;
  o.require(payload == 2048, "payload " + std::to_string(payload) + " bytes");
  o.require(size == identity_file_size(512, ck.label.size()), "unexpected file size");
  o.require(size >= 2048 && size <= 3072, "file is " + std::to_string(size) + " bytes");
  const IdentityCheckpoint back = load_identity(path);
  double worst_excess = 0.0;
  for (const auto* pair : {&ck.coefficients.a1, &ck.coefficients.a2}) {
    const Vec& got = pair == &ck.coefficients.a1 ? back.coefficients.a1 : back.coefficients.a2;
    for (Eigen::Index i = 0; i < pair->size(); ++i) {
      const double x = (*pair)[i];
      const double bound = std::max(std::ldexp(std::abs(x), -11), std::ldexp(1.0, -25));
      worst_excess = std::max(worst_excess, std::abs(got[i] - x) / bound);
    }
  }
  o.require(worst_excess <= 1.0, "quantization error exceeds binary16 bound");
  if (o.pass) o.detail = "2048-byte payload, " + std::to_string(size) + "-byte file, max err/bound " + fmt_num("%.3f", worst_excess);
  return o;
}

Outcome normalization(Setup&) {
  Outcome o;
  double worst = 0.0;
  int samples = 0;
  for (int net_seed = 0; net_seed < 10; ++net_seed) {
    const int p = net_seed % 3 == 0 ? 8 : (net_seed % 3 == 1 ? 64 : 512);
    const MappingNetwork net = MappingNetwork::initialize(p, net_seed);
    Rng rng(100 + net_seed);
    for (int i = 0; i < 100; ++i, ++samples) {
      const Vec f = rng.normal_vector(kFaceFeatureDim) * std::exp(rng.normal());
      const IdentityCoefficients c = map_to_coefficients(FaceFeature{f, ""}, net);
      worst = std::max({worst, std::abs(c.a1.norm() - 1.0), std::abs(c.a2.norm() - 1.0)});
    }
  }
  o.require(samples == 1000, "sample count");
  o.require(worst < 1e-6, "norm deviation " + fmt_num("%.3g", worst));
  if (o.pass) o.detail = "1000 samples, max |norm-1| " + fmt_num("%.2e", worst);
  return o;
}

Outcome gradient(Setup&) {
  Outcome o;
  testing::ToyWorld world(16, 8, 24, 3);
  const IdentityObjective objective(*world.basis, world.backends);
  const Image face = testing::test_face();
  const Vec feature = extract_face_features(face, *world.backends.face_encoder).values;
  double worst = 0.0;
  for (std::uint64_t seed : {5u, 6u}) {
    MappingNetwork net = MappingNetwork::initialize(8, seed);
    Rng rng(seed);
    const DenoisingSample sample = objective.draw(face, AugmentConfig{}, rng);
    o.require(sample.z0.size() == 8 * 8 * 4, "latent is not 8x8x4");
    MappingGradient grad;
    objective.loss(net, feature, sample, &grad);
    const double h = 1e-6;
    Mat fd_w(net.weight.rows(), net.weight.cols());
    Vec fd_b(net.bias.size());
    auto central = [&](double& param) {
      const double p0 = param;
      param = p0 + h;
      const double up = objective.loss(net, feature, sample);
      param = p0 - h;
      const double down = objective.loss(net, feature, sample);
      param = p0;
      return (up - down) / (2 * h);
    };
    for (Eigen::Index j = 0; j < net.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < net.weight.rows(); ++i) fd_w(i, j) = central(net.weight(i, j));
    for (Eigen::Index i = 0; i < net.bias.size(); ++i) fd_b[i] = central(net.bias[i]);
    const double num = std::sqrt((grad.weight - fd_w).squaredNorm() + (grad.bias - fd_b).squaredNorm());
    const double den = std::sqrt(fd_w.squaredNorm() + fd_b.squaredNorm());
    worst = std::max(worst, num / den);
  }
  o.require(worst < 1e-4, "relative error " + fmt_num("%.3g", worst));
  if (o.pass) o.detail = "all 8208 parameters, rel err " + fmt_num("%.2e", worst);
  return o;
}

double window_mean(const std::vector<StepRecord>& log, int first_step, int last_step) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : log) {
    if (r.step >= first_step && r.step <= last_step) {
      sum += r.loss;
      ++n;
    }
  }
  return sum / n;
}

Outcome toy_training(Setup& setup) {
  Outcome o;
  const Image face = testing::test_face("alice");
  TrainConfig config;  // 400 steps, batch 2, lr 0.005
  config.seed = 11;
  o.require(config.steps == 400 && config.batch_size == 2 && config.learning_rate == 0.005, "recipe drift");
  const FrozenSnapshot before = snapshot_frozen(setup.backends, *setup.basis);
  const TrainResult a = train_single(face, *setup.basis, setup.backends, config, "alice");
  const AuditReport audit = frozen_audit(before, snapshot_frozen(setup.backends, *setup.basis));
  const TrainResult b = train_single(face, *setup.basis, setup.backends, config, "alice");

  const double initial = window_mean(a.log, 0, 49);
  const double final = window_mean(a.log, config.steps - 50, config.steps - 1);
  const double ratio = final / initial;
  o.require(ratio < 0.5, "loss ratio " + fmt_num("%.3f", ratio));
  o.require(audit.clean(), "frozen parameters changed");
  auto bytes = [&](const TrainResult& r) {
    return serialize_identity(IdentityCheckpoint{r.coefficients[0], setup.basis->fingerprint(), "alice"});
  };
  std::string log_a, log_b;
  for (const auto& r : a.log) log_a += format_step(r) + "\n";
  for (const auto& r : b.log) log_b += format_step(r) + "\n";
  o.require(bytes(a) == bytes(b) && log_a == log_b, "runs differ under a fixed seed");
  if (o.pass)
    o.detail = "loss " + fmt_num("%.3f", initial) + " -> " + fmt_num("%.3f", final) + " (ratio " + fmt_num("%.3f", ratio) +
               "), audit clean, deterministic";
  return o;
}

Outcome joint_training(Setup& setup) {
  Outcome o;
  const fs::path images = setup.dir / "joint_faces";
  fs::create_directories(images);
  const std::vector<std::string> labels = {"alice", "bob", "carol"};
  for (const auto& l : labels) fs::copy_file(testing::fixture("faces/" + l + ".ppm"), images / (l + ".ppm"));
  const fs::path out = setup.dir / "joint";
  const int code = cli_run({"fit-joint", "--images", images.string(), "--basis", setup.basis_path, "--out", out.string(),
                            "--steps", "600", "--seed", "0"});
  o.require(code == 0, "fit-joint exited " + std::to_string(code));
  if (!o.pass) return o;

  const IdentityObjective objective(*setup.basis, setup.backends);
  const MappingNetwork init = MappingNetwork::initialize(setup.basis->p(), 0);
  const AugmentConfig train_aug;
  std::string summary;
  int checkpoints = 0;
  for (const auto& e : fs::directory_iterator(out)) checkpoints += e.path().extension() == ".celebid";
  o.require(checkpoints == 3, std::to_string(checkpoints) + " checkpoints");
  for (const auto& l : labels) {
    const Image image = read_ppm(images / (l + ".ppm"));
    const IdentityCheckpoint ck = load_identity(out / (l + ".celebid"));
    o.require(ck.label == l, "checkpoint label " + ck.label);
    const FaceFeature f = extract_face_features(image, *setup.backends.face_encoder);
    const double start = probe_loss(objective, map_to_coefficients(f, init), image, 99, 200, train_aug);
    const double end = probe_loss(objective, ck.coefficients, image, 99, 200, train_aug);
    o.require(end < start, l + " loss did not decrease");
    summary += (summary.empty() ? "" : ", ") + l + " " + fmt_num("%.3f", start) + "->" + fmt_num("%.3f", end);
  }
  if (o.pass) o.detail = summary;
  return o;
}

Outcome interpolation(Setup& setup) {
  Outcome o;
  Rng rng(9);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vec v1 = rng.normal_vector(768) * 0.02;
    const Vec v2 = rng.normal_vector(768) * 0.02;
    o.require(interpolate(v1, v2, 1.0) == v1 && interpolate(v1, v2, 0.0) == v2, "endpoints not exact");
    const double lambda = rng.uniform();
    const Vec sum = interpolate(v1, v2, lambda) + interpolate(v1, v2, 1.0 - lambda);
    worst = std::max(worst, (sum - (v1 + v2)).cwiseAbs().maxCoeff());
  }
  o.require(worst < 1e-12, "linearity error " + fmt_num("%.3g", worst));
  const fs::path out = setup.dir / "interp";
  const std::vector<std::string> lambdas = {"1", "0.75", "0.5", "0.25", "0"};
  const int code = cli_run({"interpolate", "--name-a", "Anna Berg", "--name-b", "Karl Moss", "--lambdas",
                            "1,0.75,0.5,0.25,0", "--basis", setup.basis_path, "--out", out.string(), "--steps", "5"});
  o.require(code == 0, "interpolate exited " + std::to_string(code));
  if (code == 0) {
    int json_out = 0, images = 0;
    for (const auto& e : fs::directory_iterator(out)) {
      if (e.path().filename() == "manifest.json") continue;
      json_out += e.path().extension() == ".json";
      images += e.path().extension() == ".ppm";
    }
    o.require(json_out == 5 && images == 5, "sweep emitted " + std::to_string(json_out) + "/" + std::to_string(images));
    const ComposedPair a = compose_to_pair(embed_name("Anna Berg", *setup.backends.text_encoder));
    const auto first = read_json(out / "lambda_000.json").at("first").get<std::vector<double>>();
    o.require(Vec(Eigen::Map<const Vec>(first.data(), 768)) == a.pair.first, "lambda=1 is not name A");
  }
  if (o.pass) o.detail = "endpoints exact, linearity err " + fmt_num("%.1e", worst) + ", 5 outputs for 5 lambdas";
  return o;
}

Outcome substitution(Setup& setup) {
  Outcome o;
  const TextEncoder& enc = *setup.backends.text_encoder;
  Rng rng(10);
  auto pair = [&] { return EmbeddingPair{rng.normal_vector(768) * 0.02, rng.normal_vector(768) * 0.02}; };
  const std::map<std::string, EmbeddingPair> ids = {{"ID1", pair()}, {"ID2", pair()}};
  const PromptTemplate prompt{"A photo of {ID1} talks with {ID2} in a park"};
  const ConditionedSequence seq = substitute_identity(prompt, ids, enc);
  const Mat plain = encode_plain("A photo of xa xb talks with xc xd in a park", enc);
  o.require(seq.length() == plain.rows(), "sequence length differs");
  o.require(seq.placeholder_spans.size() == 2, "expected two identity spans");
  if (!o.pass) return o;
  std::vector<bool> in_span(seq.length(), false);
  for (const auto& span : seq.placeholder_spans) {
    o.require(span.length == 2, "span is not two slots");
    const EmbeddingPair& id = ids.at(span.label);
    o.require(seq.embeddings.row(span.start).transpose() == id.first, span.label + " first slot");
    o.require(seq.embeddings.row(span.start + 1).transpose() == id.second, span.label + " second slot");
    in_span[span.start] = in_span[span.start + 1] = true;
  }
  o.require(seq.placeholder_spans[0].start == 4 && seq.placeholder_spans[1].start == 8, "span positions");
  int untouched = 0;
  for (int r = 0; r < seq.length(); ++r) {
    if (in_span[r]) continue;
    o.require(seq.embeddings.row(r) == plain.row(r), "row " + std::to_string(r) + " changed");
    ++untouched;
  }
  if (o.pass) o.detail = "2 markers x 2 slots, " + std::to_string(untouched) + " other rows bit-identical";
  return o;
}

Outcome dedup(Setup&) {
  Outcome o;
  const NameList names = load_names(testing::fixture("celeb_names.txt"));
  NameList doubled = names;
  for (const auto& n : names.names) doubled.names.push_back(n);
  for (std::size_t i = 0; i < names.names.size(); i += 3) doubled.names.push_back(names.names[i]);
  auto enc = synthetic_text_encoder(0, 128, 77);
  auto build = [&](const NameList& list) {
    const DictionaryBuild dict = embed_names(list, *enc);
    const auto [first, second] = build_sets(dict.pairs);
    return serialize_basis(build_basis(first, second, 64));
  };
  o.require(build(names) == build(doubled), "duplicated names change the basis");
  if (o.pass) o.detail = std::to_string(names.names.size()) + " -> " + std::to_string(doubled.names.size()) + " names, bit-identical basis";
  return o;
}

Outcome pipeline(Setup& setup) {
  Outcome o;
  const fs::path dir = setup.dir / "pipeline";
  const std::string basis = (dir / "basis.cbb").string();
  const std::string id = (dir / "alice.celebid").string();
  const std::string gen = (dir / "gen").string();
  const std::string report = (dir / "report.json").string();
  std::vector<std::string> manifests;

  o.require(cli_run({"build-basis", "--names", testing::fixture("celeb_names.txt").string(), "--out", basis}) == 0, "build-basis");
  manifests.push_back(cli::manifest_path_for_file(basis).string());
  o.require(o.pass && cli_run({"fit", "--image", testing::fixture("faces/alice.ppm").string(), "--basis", basis, "--out", id}) == 0, "fit");
  manifests.push_back(cli::manifest_path_for_file(id).string());
  o.require(o.pass && cli_run({"generate", "--prompt", "A photo of {ID} is playing guitar", "--identity", "ID=" + id,
                               "--basis", basis, "--seed", "1", "--count", "2", "--out", gen}) == 0,
            "generate");
  manifests.push_back(cli::manifest_path_for_dir(gen).string());
  if (!o.pass) return o;

  json items = json::array();
  for (const char* img : {"image_000.ppm", "image_001.ppm"})
    items.push_back(json{{"image", std::string("gen/") + img}, {"prompt", "A photo of a person is playing guitar"}, {"label", "alice"}});
  json manifest;
  manifest["references"] = json{{"alice", testing::fixture("faces/alice.ppm").string()}};
  manifest["items"] = items;
  atomic_write_file(dir / "eval.json", manifest.dump(2));
  o.require(cli_run({"eval", "--manifest", (dir / "eval.json").string(), "--out", report}) == 0, "eval");
  manifests.push_back(cli::manifest_path_for_file(report).string());
  if (!o.pass) return o;
  const EvalReport r = read_report(report);
  o.require(r.total == 2, "report rows");

  for (const auto& m : manifests) o.require(cli_run({"replay", "--manifest", m}) == 0, "replay " + fs::path(m).filename().string());
  if (o.pass) o.detail = "4 commands exit 0, 4 manifests replay, prompt score " + fmt_num("%.3f", r.prompt_score);
  return o;
}

Outcome ablations(Setup& setup) {
  Outcome o;
  const fs::path dir = setup.dir / "ablation";
  const std::string face = testing::fixture("faces/bob.ppm").string();
  struct Variant {
    std::string name;
    std::vector<std::string> basis_flags;
    std::vector<std::string> fit_flags;
    int p;
  };
  const std::string big = testing::fixture("celeb_names_1500.txt").string();
  const std::vector<Variant> variants = {
      {"flatten", {"--flatten"}, {}, 512},      {"direct", {}, {"--mode", "direct"}, 512},
      {"p64", {"--p", "64"}, {}, 64},           {"p256", {"--p", "256"}, {}, 256},
      {"p512", {"--p", "512"}, {}, 512},        {"p768", {"--p", "768"}, {}, 768},
  };
  std::string summary;
  for (const auto& v : variants) {
    const fs::path vd = dir / v.name;
    const std::string basis = (vd / "basis.cbb").string();
    const std::string id = (vd / "id.celebid").string();
    std::vector<std::string> b = {"build-basis", "--names", big, "--out", basis};
    b.insert(b.end(), v.basis_flags.begin(), v.basis_flags.end());
    std::vector<std::string> f = {"fit", "--image", face, "--basis", basis, "--out", id};
    f.insert(f.end(), v.fit_flags.begin(), v.fit_flags.end());
    bool ok = cli_run(b) == 0 && cli_run(f) == 0 &&
              cli_run({"generate", "--prompt", "A photo of {ID}", "--identity", "ID=" + id, "--basis", basis,
                       "--out", (vd / "gen").string()}) == 0;
    if (ok) {
      const CelebBasis cb = load_basis(basis);
      const IdentityCheckpoint ck = load_identity(id);
      ok = cb.p() == v.p && ck.coefficients.p() == v.p && ck.coefficients.a1.allFinite() &&
           (v.name != "flatten" || cb.layout() == BasisLayout::kFlatten);
    }
    o.require(ok, v.name + " failed");
    summary += (summary.empty() ? "" : " ") + v.name + (ok ? ":ok" : ":FAIL");
  }
  o.detail = summary;
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  Outcome (*run)(Setup&);
};

}  // namespace
}  // namespace celeb

int main() {
  using namespace celeb;
  const std::vector<Criterion> criteria = {
      {1, "pca-oracle", 5, pca_oracle},          {2, "orthonormality", 1, orthonormality},
      {3, "round-trip", 1, round_trip},          {4, "storage", 1, storage},
      {5, "normalization", 2, normalization},    {6, "gradient", 30, gradient},
      {7, "toy-training", 60, toy_training},     {8, "joint-training", 120, joint_training},
      {9, "interpolation", 1, interpolation},    {10, "substitution", 1, substitution},
      {11, "dedup", 1, dedup},                   {12, "pipeline", 90, pipeline},
      {13, "ablations", 300, ablations},
  };
  spdlog::set_level(spdlog::level::err);
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  Setup setup;
  std::printf("setup: fixture basis d=768 p=512 built in %.2f s\n",
              std::chrono::duration<double>(Clock::now() - t0).count());
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run(setup);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (seconds > c.budget_s) o.require(false, "over budget " + fmt_num("%.0f s", c.budget_s));
    failed += !o.pass;
    std::printf("%s %2d %-15s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

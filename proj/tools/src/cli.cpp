// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis_cli/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "celebbasis/celebbasis.hpp"

#ifndef CELEBBASIS_VERSION
#define CELEBBASIS_VERSION "0.0.0"
#endif

namespace celeb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const RunManifest& m) {
  j = json{{"schema_version", m.schema_version},
           {"tool", m.tool},
           {"version", m.version},
           {"command", m.command},
           {"argv", m.argv},
           {"config", m.config},
           {"seeds", m.seeds},
           {"adapters", m.adapters},
           {"inputs", m.inputs},
           {"outputs", m.outputs}};
}

void from_json(const json& j, RunManifest& m) {
  try {
    m.schema_version = j.at("schema_version").get<int>();
    m.tool = j.at("tool").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config = j.value("config", json::object());
    m.seeds = j.value("seeds", json::object());
    m.adapters = j.value("adapters", std::map<std::string, std::string>{});
    m.inputs = j.value("inputs", std::map<std::string, std::string>{});
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
  } catch (const json::exception& e) {
    throw FormatError(std::string("run manifest: ") + e.what());
  }
}

RunManifest read_manifest(const fs::path& path) {
  const Bytes bytes = read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError("run manifest " + path.string() + ": " + e.what());
  }
  return j.get<RunManifest>();
}

fs::path manifest_path_for_file(const fs::path& output) {
  fs::path p = output;
  p += ".manifest.json";
  return p;
}

fs::path manifest_path_for_dir(const fs::path& output_dir) { return output_dir / "manifest.json"; }

namespace {

struct Session {
  std::ostream& out;
  std::ostream& err;
  RunManifest manifest;

  void input(const fs::path& p) { manifest.inputs[p.generic_string()] = file_digest(p); }
  void output(const fs::path& p) { manifest.outputs[p.generic_string()] = file_digest(p); }
  void finish(const fs::path& path) {
    atomic_write_file(path, json(manifest).dump(2) + "\n");
  }
};

// Shared backend flags.
struct BackendFlags {
  std::string encoder = "synthetic-clip";
  std::uint64_t backend_seed = 0;
  std::string detector = "always";

  void add(CLI::App* app, bool with_detector) {
    app->add_option("--encoder", encoder, "text encoder adapter")->capture_default_str();
    app->add_option("--backend-seed", backend_seed, "seed for synthetic adapters")->capture_default_str();
    if (with_detector) app->add_option("--detector", detector, "face detector rule")->capture_default_str();
  }

  BackendConfig config(const CelebBasis* basis) const {
    BackendConfig c;
    c.text_encoder = encoder;
    c.backend_seed = backend_seed;
    c.detector = detector;
    if (basis) {
      c.encoder_seed = basis->provenance().build_seed;
      c.dim = basis->dim();
    }
    return c;
  }
};

struct TrainFlags {
  int steps = 400;
  double lr = 0.005;
  int batch = 2;
  std::uint64_t seed = 0;
  std::string mode = "mlp";
  std::string optimizer = "sgd";
  bool no_augment = false;

  void add(CLI::App* app) {
    app->add_option("--steps", steps, "optimization steps")->capture_default_str();
    app->add_option("--lr", lr, "learning rate")->capture_default_str();
    app->add_option("--batch", batch, "batch size")->capture_default_str();
    app->add_option("--seed", seed, "training seed")->capture_default_str();
    app->add_option("--mode", mode, "mlp or direct")->check(CLI::IsMember({"mlp", "direct"}))->capture_default_str();
    app->add_option("--optimizer", optimizer, "sgd, momentum or adam")
        ->check(CLI::IsMember({"sgd", "momentum", "adam"}))
        ->capture_default_str();
    app->add_flag("--no-augment", no_augment, "disable augmentation");
  }

  TrainConfig config(int p) const {
    json j{{"learning_rate", lr}, {"batch_size", batch}, {"steps", steps}, {"seed", seed},
           {"mode", mode},        {"optimizer", optimizer}, {"p", p}};
    TrainConfig c = j.get<TrainConfig>();
    if (no_augment) c.augmentation = AugmentConfig::disabled();
    c.validate();
    return c;
  }
};

std::string stem_label(const fs::path& p) { return p.stem().string(); }

std::string join_log(const std::vector<StepRecord>& log) {
  std::string text;
  for (const auto& r : log) {
    text += format_step(r);
    text += '\n';
  }
  return text;
}

// ---- build-basis ----

struct BuildBasisArgs {
  std::string names;
  int p = 512;
  std::string out;
  std::string encoder = "synthetic-clip";
  std::uint64_t encoder_seed = 0;
  int dim = 768;
  bool flatten = false;
};

void cmd_build_basis(const BuildBasisArgs& a, Session& s) {
  const NameList names = load_names(a.names);
  s.input(a.names);
  BackendConfig bc;
  bc.text_encoder = a.encoder;
  bc.encoder_seed = a.encoder_seed;
  bc.dim = a.dim;
  const Backends backends = make_backends(bc);
  const DictionaryBuild dict = embed_names(names, *backends.text_encoder);
  const auto [first, second] = build_sets(dict.pairs);
  const CelebBasis basis = a.flatten ? build_flat_basis(first, second, a.p, a.encoder_seed)
                                     : build_basis(first, second, a.p, a.encoder_seed);
  save_basis(basis, a.out);
  s.output(a.out);

  s.manifest.config = {{"names", a.names}, {"p", a.p},     {"out", a.out},        {"encoder", a.encoder},
                       {"dim", a.dim},     {"flatten", a.flatten}, {"names_used", dict.pairs.size()},
                       {"names_dropped", dict.dropped.size()}};
  s.manifest.seeds = {{"encoder_seed", a.encoder_seed}};
  s.manifest.adapters = {{"text_encoder", backends.text_encoder->info().id}};
  s.finish(manifest_path_for_file(a.out));
  s.out << "basis " << a.out << " d=" << basis.dim() << " p=" << basis.p() << " rows=" << first.size() << "/"
        << second.size() << " layout=" << (a.flatten ? "flatten" : "paired") << " fingerprint=" << hex64(basis.fingerprint())
        << "\n";
}

// ---- fit / fit-joint ----

struct FitArgs {
  std::string image;
  std::string basis;
  std::string out;
  std::string label;
  std::string log;
  TrainFlags train;
  BackendFlags backend;
};

void record_training(Session& s, const TrainConfig& cfg, const Backends& backends, const BackendFlags& bf) {
  s.manifest.config["train"] = cfg;
  s.manifest.config["backend"] = bf.config(nullptr);
  s.manifest.seeds = {{"train_seed", cfg.seed}, {"backend_seed", bf.backend_seed}};
  s.manifest.adapters = backends.identifiers();
}

void cmd_fit(const FitArgs& a, Session& s) {
  const CelebBasis basis = load_basis(a.basis);
  s.input(a.basis);
  const Image image = read_ppm(a.image);
  s.input(a.image);
  const std::string label = a.label.empty() ? stem_label(a.image) : a.label;
  const TrainConfig cfg = a.train.config(basis.p());
  const Backends backends = make_backends(a.backend.config(&basis));

  const TrainResult result = train_single(image, basis, backends, cfg, label);
  const IdentityCheckpoint checkpoint{result.coefficients.front(), basis.fingerprint(), label};
  save_identity(checkpoint, a.out);
  s.output(a.out);
  const fs::path log_path = a.log.empty() ? fs::path(a.out).concat(".log") : fs::path(a.log);
  atomic_write_file(log_path, join_log(result.log));
  s.output(log_path);

  record_training(s, cfg, backends, a.backend);
  s.manifest.config["label"] = label;
  s.finish(manifest_path_for_file(a.out));
  s.out << "identity " << label << " -> " << a.out << " steps=" << cfg.steps;
  if (!result.log.empty()) s.out << " final_loss=" << result.log.back().loss;
  s.out << "\n";
}

struct FitJointArgs {
  std::string images;
  std::string basis;
  std::string out;
  TrainFlags train;
  BackendFlags backend;
};

void cmd_fit_joint(const FitJointArgs& a, Session& s) {
  const CelebBasis basis = load_basis(a.basis);
  s.input(a.basis);
  if (!fs::is_directory(a.images)) throw DataError("not a directory: " + a.images);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.images))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .ppm images in " + a.images);

  std::vector<LabeledImage> images;
  for (const auto& f : files) {
    images.push_back({stem_label(f), read_ppm(f)});
    s.input(f);
  }
  const TrainConfig cfg = a.train.config(basis.p());
  const Backends backends = make_backends(a.backend.config(&basis));
  const TrainResult result = train_joint(images, basis, backends, cfg);

  fs::create_directories(a.out);
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    const fs::path path = fs::path(a.out) / (result.labels[i] + ".celebid");
    save_identity({result.coefficients[i], basis.fingerprint(), result.labels[i]}, path);
    s.output(path);
  }
  const fs::path log_path = fs::path(a.out) / "train.log";
  atomic_write_file(log_path, join_log(result.log));
  s.output(log_path);

  record_training(s, cfg, backends, a.backend);
  s.manifest.config["labels"] = result.labels;
  s.finish(manifest_path_for_dir(a.out));
  s.out << "joint " << result.labels.size() << " identities -> " << a.out << " steps=" << cfg.steps << "\n";
}

// ---- generate ----

struct GenerateArgs {
  std::string prompt;
  std::vector<std::string> identities;
  std::string basis;
  std::uint64_t seed = 0;
  std::string out;
  int count = 1;
  int steps = 20;
  double guidance = 1.0;
  bool grid = false;
  BackendFlags backend;
};

std::pair<std::string, std::string> split_binding(const std::string& binding) {
  const auto eq = binding.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == binding.size())
    throw UsageError("identity binding must be LABEL=PATH, got '" + binding + "'");
  return {binding.substr(0, eq), binding.substr(eq + 1)};
}

void cmd_generate(const GenerateArgs& a, Session& s) {
  const PromptTemplate prompt{a.prompt};
  std::map<std::string, std::string> paths;
  for (const auto& b : a.identities) {
    auto [label, path] = split_binding(b);
    if (!paths.emplace(label, path).second) throw UsageError("duplicate binding for " + label);
  }
  for (const auto& m : prompt.markers())
    if (!paths.count(m)) throw UsageError("unbound marker {" + m + "}: pass --identity " + m + "=PATH");

  const CelebBasis basis = load_basis(a.basis);
  s.input(a.basis);
  GenerationRequest req;
  req.prompt = prompt;
  req.seed = a.seed;
  req.count = a.count;
  req.sampler.steps = a.steps;
  req.sampler.guidance = a.guidance;
  for (const auto& [label, path] : paths) {
    req.identities.emplace(label, load_identity(path));
    s.input(path);
  }
  const Backends backends = make_backends(a.backend.config(&basis));
  const std::vector<Image> images = generate(req, basis, backends);

  fs::create_directories(a.out);
  for (std::size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "image_%03zu.ppm", i);
    const fs::path path = fs::path(a.out) / name;
    write_ppm(path, images[i]);
    s.output(path);
  }
  if (a.grid) {
    const fs::path path = fs::path(a.out) / "grid.ppm";
    write_ppm(path, make_grid(images, std::min<int>(a.count, 4)));
    s.output(path);
  }
  s.manifest.config = {{"prompt", a.prompt}, {"identities", a.identities}, {"count", a.count},
                       {"steps", a.steps},   {"guidance", a.guidance},     {"grid", a.grid},
                       {"backend", a.backend.config(&basis)}};
  s.manifest.seeds = {{"seed", a.seed}, {"backend_seed", a.backend.backend_seed}};
  s.manifest.adapters = backends.identifiers();
  s.finish(manifest_path_for_dir(a.out));
  s.out << "generated " << images.size() << " images -> " << a.out << "\n";
}

// ---- interpolate ----

struct InterpolateArgs {
  std::string name_a;
  std::string name_b;
  std::vector<double> lambdas;
  std::string basis;
  std::string out;
  std::string prompt = "A photo of {ID}";
  std::uint64_t seed = 0;
  int steps = 20;
  BackendFlags backend;
};

void cmd_interpolate(const InterpolateArgs& a, Session& s) {
  if (a.lambdas.empty()) throw UsageError("--lambdas needs at least one value");
  const PromptTemplate prompt{a.prompt};
  const auto markers = prompt.markers();
  if (markers.empty()) throw UsageError("interpolation prompt needs an identity marker");

  const CelebBasis basis = load_basis(a.basis);
  s.input(a.basis);
  const Backends backends = make_backends(a.backend.config(&basis));
  const TextEncoder& encoder = *backends.text_encoder;
  const ComposedPair pa = compose_to_pair(embed_name(a.name_a, encoder));
  const ComposedPair pb = compose_to_pair(embed_name(a.name_b, encoder));

  fs::create_directories(a.out);
  SamplerParams params;
  params.steps = a.steps;
  for (std::size_t i = 0; i < a.lambdas.size(); ++i) {
    const double lambda = a.lambdas[i];
    const EmbeddingPair pair = interpolate(pa.pair, pb.pair, lambda);
    const EmbeddingPair recon = synthesize_embedding(basis, project(basis, pair));
    const double residual = std::sqrt((recon.first - pair.first).squaredNorm() + (recon.second - pair.second).squaredNorm());

    json j{{"lambda", lambda},
           {"name_a", a.name_a},
           {"name_b", a.name_b},
           {"first", std::vector<double>(pair.first.data(), pair.first.data() + pair.first.size())},
           {"second", std::vector<double>(pair.second.data(), pair.second.data() + pair.second.size())},
           {"basis_residual", residual}};
    char stem[32];
    std::snprintf(stem, sizeof stem, "lambda_%03zu", i);
    const fs::path json_path = fs::path(a.out) / (std::string(stem) + ".json");
    atomic_write_file(json_path, j.dump(2) + "\n");
    s.output(json_path);

    std::map<std::string, EmbeddingPair> bound;
    for (const auto& m : markers) bound.emplace(m, pair);
    const Mat condition = encoder.transform(substitute_identity(prompt, bound, encoder).embeddings);
    const fs::path image_path = fs::path(a.out) / (std::string(stem) + ".ppm");
    write_ppm(image_path, backends.sampler->sample(condition, derive_seed(a.seed, static_cast<std::uint64_t>(i)), params));
    s.output(image_path);
  }
  s.manifest.config = {{"name_a", a.name_a}, {"name_b", a.name_b}, {"lambdas", a.lambdas},
                       {"prompt", a.prompt}, {"steps", a.steps},   {"backend", a.backend.config(&basis)}};
  s.manifest.seeds = {{"seed", a.seed}, {"backend_seed", a.backend.backend_seed}};
  s.manifest.adapters = backends.identifiers();
  s.finish(manifest_path_for_dir(a.out));
  s.out << "interpolated " << a.lambdas.size() << " points -> " << a.out << "\n";
}

// ---- eval ----

struct EvalArgs {
  std::string manifest;
  std::string out;
  BackendFlags backend;
};

void cmd_eval(const EvalArgs& a, Session& s) {
  const Bytes bytes = read_file(a.manifest);
  s.input(a.manifest);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError("eval manifest " + a.manifest + ": " + e.what());
  }
  const fs::path base = fs::path(a.manifest).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  const Backends backends = make_backends(a.backend.config(nullptr));
  std::map<std::string, FaceFeature> references;
  std::vector<EvalItem> items;
  try {
    const json refs = j.value("references", json::object());
    const json rows = j.value("items", json::array());
    for (const auto& [label, path] : refs.items()) {
      const fs::path p = resolve(path.get<std::string>());
      references.emplace(label, extract_face_features(read_ppm(p), *backends.face_encoder));
      s.input(p);
    }
    for (const auto& item : rows) {
      EvalItem e;
      e.image_path = item.at("image").get<std::string>();
      const fs::path p = resolve(e.image_path);
      e.image = read_ppm(p);
      s.input(p);
      e.prompt = item.value("prompt", std::string());
      if (item.contains("label") && !item.at("label").is_null()) e.label = item.at("label").get<std::string>();
      items.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError("eval manifest " + a.manifest + ": " + e.what());
  }
  if (items.empty()) throw DataError("eval manifest " + a.manifest + " lists no items");

  const EvalReport report = evaluate_run(items, references, backends);
  write_report(report, a.out);
  s.output(a.out);
  s.manifest.config = {{"manifest", a.manifest}, {"out", a.out}, {"backend", a.backend.config(nullptr)}};
  s.manifest.seeds = {{"backend_seed", a.backend.backend_seed}};
  s.manifest.adapters = backends.identifiers();
  s.finish(manifest_path_for_file(a.out));
  s.out << "eval " << report.total << " images prompt_score=" << report.prompt_score << " detect_rate=" << report.detect_rate;
  if (report.identity_score) s.out << " identity_score=" << *report.identity_score;
  s.out << "\n";
}

// ---- config file ----

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  return v.dump();
}

json load_config(const std::string& path) {
  const Bytes bytes = read_file(path);
  try {
    json j = json::parse(bytes.begin(), bytes.end());
    if (!j.is_object()) throw FormatError("config " + path + ": top level must be an object");
    return j;
  } catch (const json::exception& e) {
    throw FormatError("config " + path + ": " + e.what());
  }
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

// Appends `--key value` for config entries the command line did not set.
void apply_config(const json& config, CLI::App* sub, std::vector<std::string>& args) {
  json merged = json::object();
  for (const auto& [k, v] : config.items())
    if (!v.is_object()) merged[k] = v;
  if (config.contains(sub->get_name()) && config[sub->get_name()].is_object())
    for (const auto& [k, v] : config[sub->get_name()].items()) merged[k] = v;

  for (const auto& [key, value] : merged.items()) {
    const std::string flag = "--" + key;
    CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt || given_on_command_line(args, flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& item : value) {
        args.push_back(flag);
        args.push_back(scalar_text(item));
      }
    } else if (!value.is_null()) {
      args.push_back(flag);
      args.push_back(scalar_text(value));
    }
  }
}

std::string category_name(Error::Category c) {
  switch (c) {
    case Error::Category::kUsage: return "usage";
    case Error::Category::kData: return "data";
    case Error::Category::kAdapter: return "adapter";
  }
  return "data";
}

int exit_code(Error::Category c) {
  switch (c) {
    case Error::Category::kUsage: return kExitUsage;
    case Error::Category::kData: return kExitData;
    case Error::Category::kAdapter: return kExitAdapter;
  }
  return kExitData;
}

void report_error(std::ostream& err, const std::string& category, std::string message) {
  std::replace(message.begin(), message.end(), '\n', ' ');
  err << kToolName << ": error[" << category << "]: " << message << "\n";
}

int cmd_replay(const std::string& path, std::ostream& out, std::ostream& err);

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identity personalization with a celebrity-name embedding basis", kToolName};
  app.require_subcommand(1);
  app.set_version_flag("--version", CELEBBASIS_VERSION);
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with option defaults");

  BuildBasisArgs bb;
  auto* build = app.add_subcommand("build-basis", "build a basis from a name list");
  build->add_option("--names", bb.names, "name list file")->required();
  build->add_option("--p", bb.p, "basis rank")->capture_default_str();
  build->add_option("--out", bb.out, "output basis file")->required();
  build->add_option("--encoder", bb.encoder, "text encoder adapter")->capture_default_str();
  build->add_option("--encoder-seed", bb.encoder_seed, "text encoder seed")->capture_default_str();
  build->add_option("--dim", bb.dim, "embedding width")->capture_default_str();
  build->add_flag("--flatten", bb.flatten, "pool both name slots into one basis");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit one identity from a face image");
  fit->add_option("--image", fa.image, "face image (PPM)")->required();
  fit->add_option("--basis", fa.basis, "basis file")->required();
  fit->add_option("--out", fa.out, "output identity checkpoint")->required();
  fit->add_option("--label", fa.label, "identity label (default: image stem)");
  fit->add_option("--log", fa.log, "loss log path (default: OUT.log)");
  fa.train.add(fit);
  fa.backend.add(fit, false);

  FitJointArgs ja;
  ja.train.steps = TrainConfig::kJointSteps;
  auto* joint = app.add_subcommand("fit-joint", "fit one shared network over a directory of faces");
  joint->add_option("--images", ja.images, "directory of face images (PPM)")->required();
  joint->add_option("--basis", ja.basis, "basis file")->required();
  joint->add_option("--out", ja.out, "output directory")->required();
  ja.train.add(joint);
  ja.backend.add(joint, false);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "sample images for a prompt with identity markers");
  gen->add_option("--prompt", ga.prompt, "prompt, identities written {ID}, {ID1}, ...")->required();
  gen->add_option("--identity", ga.identities, "LABEL=PATH binding, repeatable");
  gen->add_option("--basis", ga.basis, "basis file")->required();
  gen->add_option("--seed", ga.seed, "sampling seed")->capture_default_str();
  gen->add_option("--out", ga.out, "output directory")->required();
  gen->add_option("--count", ga.count, "images to sample")->capture_default_str();
  gen->add_option("--steps", ga.steps, "sampler steps")->capture_default_str();
  gen->add_option("--guidance", ga.guidance, "classifier-free guidance scale")->capture_default_str();
  gen->add_flag("--grid", ga.grid, "also write a contact sheet");
  ga.backend.add(gen, false);

  InterpolateArgs ia;
  auto* interp = app.add_subcommand("interpolate", "sweep between two name embeddings");
  interp->add_option("--name-a", ia.name_a, "first name")->required();
  interp->add_option("--name-b", ia.name_b, "second name")->required();
  interp->add_option("--lambdas", ia.lambdas, "comma-separated weights on name A")->required()->delimiter(',');
  interp->add_option("--basis", ia.basis, "basis file")->required();
  interp->add_option("--out", ia.out, "output directory")->required();
  interp->add_option("--prompt", ia.prompt, "prompt used for the images")->capture_default_str();
  interp->add_option("--seed", ia.seed, "sampling seed")->capture_default_str();
  interp->add_option("--steps", ia.steps, "sampler steps")->capture_default_str();
  ia.backend.add(interp, false);

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "score generated images");
  ev->add_option("--manifest", ea.manifest, "evaluation manifest (JSON)")->required();
  ev->add_option("--out", ea.out, "report path")->required();
  ea.backend.add(ev, true);

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "re-run a recorded command and compare outputs");
  replay->add_option("--manifest", replay_path, "run manifest")->required();

  try {
    // Pull the config path out first so its values can be folded into the argument list.
    std::vector<std::string> args;
    for (std::size_t i = 0; i < raw_args.size(); ++i) {
      if (raw_args[i] == "--config") {
        if (i + 1 >= raw_args.size()) throw UsageError("--config needs a path");
        config_path = raw_args[++i];
      } else if (raw_args[i].rfind("--config=", 0) == 0) {
        config_path = raw_args[i].substr(9);
      } else {
        args.push_back(raw_args[i]);
      }
    }
    if (!config_path.empty()) {
      const json config = load_config(config_path);
      CLI::App* chosen = nullptr;
      for (const auto& a : args)
        if ((chosen = app.get_subcommand_no_throw(a))) break;
      if (chosen) apply_config(config, chosen, args);
    }

    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e, out, err);
      report_error(err, "usage", e.what());
      return kExitUsage;
    }

    Session session{out, err, {}};
    session.manifest.version = CELEBBASIS_VERSION;
    session.manifest.argv = args;
    if (build->parsed()) {
      session.manifest.command = "build-basis";
      cmd_build_basis(bb, session);
    } else if (fit->parsed()) {
      session.manifest.command = "fit";
      cmd_fit(fa, session);
    } else if (joint->parsed()) {
      session.manifest.command = "fit-joint";
      cmd_fit_joint(ja, session);
    } else if (gen->parsed()) {
      session.manifest.command = "generate";
      cmd_generate(ga, session);
    } else if (interp->parsed()) {
      session.manifest.command = "interpolate";
      cmd_interpolate(ia, session);
    } else if (ev->parsed()) {
      session.manifest.command = "eval";
      cmd_eval(ea, session);
    } else if (replay->parsed()) {
      return cmd_replay(replay_path, out, err);
    }
    return kExitOk;
  } catch (const RankError& e) {
    std::string message = std::string("rank error: ") + e.what();
    if (message.find("achievable") == std::string::npos)
      message += " (achievable rank " + std::to_string(e.achievable_rank()) + ")";
    report_error(err, "data", message);
    return kExitData;
  } catch (const Error& e) {
    report_error(err, category_name(e.category()), e.what());
    return exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    report_error(err, "data", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    report_error(err, "data", e.what());
    return kExitData;
  }
}

namespace {

int cmd_replay(const std::string& path, std::ostream& out, std::ostream& err) {
  const RunManifest recorded = read_manifest(path);
  if (recorded.tool != kToolName) throw FormatError("run manifest " + path + ": not written by " + kToolName);
  if (recorded.command == "replay" || recorded.argv.empty() || recorded.argv.front() != recorded.command)
    throw FormatError("run manifest " + path + ": argv does not start with its command");

  for (const auto& [input, digest] : recorded.inputs) {
    if (!fs::exists(input)) throw DataError("replay: input missing: " + input);
    if (file_digest(input) != digest) throw DataError("replay: input changed since the run: " + input);
  }
  std::ostringstream child_out;
  const int rc = run_cli(recorded.argv, child_out, err);
  if (rc != kExitOk) return rc;

  int mismatches = 0;
  for (const auto& [output, digest] : recorded.outputs) {
    if (!fs::exists(output) || file_digest(output) != digest) {
      report_error(err, "data", "replay: output differs: " + output);
      ++mismatches;
    }
  }
  if (mismatches > 0) return kExitData;
  out << "replay ok " << recorded.command << " outputs=" << recorded.outputs.size() << "\n";
  return kExitOk;
}

}  // namespace

}  // namespace celeb::cli

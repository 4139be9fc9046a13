// asdscreen: command-line front end for the screening pipeline.
// Subcommands: ingest, split, augment-plan, train, evaluate, compare, audit.
// Exit codes: 0 success, 1 operational error, 2 audit/metric violation.

#include <clocale>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "asdscreen/errors.hpp"
#include "asdscreen/loader.hpp"
#include "asdscreen/manifest.hpp"
#include "asdscreen/metrics.hpp"
#include "asdscreen/model.hpp"
#include "asdscreen/privacy.hpp"
#include "asdscreen/report.hpp"
#include "asdscreen/trainer.hpp"
#include "asdscreen/transforms.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace asdscreen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;

// Optional file-level RBAC: when a policy/actor pair is given, every artifact
// touch is checked and logged; denials abort with an operational error.
struct RbacOptions {
  std::string policy_path;
  std::string actor;
  std::string log_path;
};

class Rbac {
 public:
  explicit Rbac(const RbacOptions& opts) {
    if (opts.policy_path.empty()) return;
    if (opts.actor.empty() || opts.log_path.empty()) {
      throw ConfigError("--policy requires --actor and --access-log");
    }
    policy_ = RolePolicy::from_json_file(opts.policy_path);
    log_ = std::make_unique<AccessLog>(opts.log_path);
    actor_ = opts.actor;
  }

  void require(Action action, ArtifactClass cls, const std::string& artifact) {
    if (!log_) return;
    if (!authorize(*policy_, *log_, actor_, action, cls, artifact)) {
      throw ConfigError("access denied: role '" + actor_ + "' may not " +
                        to_string(action) + " " + to_string(cls) + " (" + artifact + ")");
    }
  }

 private:
  std::optional<RolePolicy> policy_;
  std::unique_ptr<AccessLog> log_;
  std::string actor_;
};

void add_rbac_flags(CLI::App* cmd, RbacOptions& opts) {
  cmd->add_option("--policy", opts.policy_path, "role policy JSON; enables RBAC checks");
  cmd->add_option("--actor", opts.actor, "acting role for RBAC checks");
  cmd->add_option("--access-log", opts.log_path, "append-only access log (JSON Lines)");
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- ingest --

struct IngestArgs {
  std::string root;
  std::string salt;
  std::string out;
  bool no_timestamps = false;
  RbacOptions rbac;
};

int cmd_ingest(const IngestArgs& args) {
  Rbac rbac(args.rbac);
  DatasetManifest manifest = scan_corpus(args.root, args.salt);
  if (args.no_timestamps) manifest.created_at = "";

  std::set<std::string> subjects[2];
  size_t samples[2] = {0, 0};
  for (const auto& r : manifest.records) {
    subjects[r.label].insert(r.subject);
    samples[r.label]++;
  }
  std::printf("class 1 (ASD): %zu subjects, %zu samples\n", subjects[1].size(), samples[1]);
  std::printf("class 0 (neurotypical): %zu subjects, %zu samples\n", subjects[0].size(),
              samples[0]);

  rbac.require(Action::write, ArtifactClass::manifests, args.out);
  write_manifest(manifest, args.out);
  std::printf("wrote %s (%zu records)\n", args.out.c_str(), manifest.records.size());
  return kExitOk;
}

// ----------------------------------------------------------------- split --

struct SplitArgs {
  std::string manifest;
  std::string out;
  SplitConfig cfg;
  bool no_stratify = false;
  RbacOptions rbac;
};

int cmd_split(const SplitArgs& args) {
  Rbac rbac(args.rbac);
  rbac.require(Action::read, ArtifactClass::manifests, args.manifest);
  DatasetManifest manifest = read_manifest(args.manifest);
  SplitConfig cfg = args.cfg;
  cfg.stratify = !args.no_stratify;
  DatasetManifest out = make_splits(manifest, cfg);

  for (Split s : {Split::train, Split::val, Split::test}) {
    const auto [neg, pos] = out.class_counts(s);
    if (neg + pos == 0 && s == Split::test) continue;
    std::printf("%s: %zu samples (%zu pos / %zu neg)\n", to_string(s).c_str(), neg + pos,
                pos, neg);
  }
  rbac.require(Action::write, ArtifactClass::manifests, args.out);
  write_manifest(out, args.out);
  std::printf("wrote %s\n", args.out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------- augment-plan --

struct AugmentArgs {
  std::string manifest;
  std::string out;
  std::string specs_file;
  std::string split = "train";
  RbacOptions rbac;
};

std::vector<AugmentationSpec> load_specs(const std::string& path) {
  if (path.empty()) return default_augmentations();
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  std::vector<AugmentationSpec> specs;
  for (const auto& tag : j) {
    specs.push_back(parse_aug_tag(tag.get<std::string>()));
  }
  return specs;
}

int cmd_augment_plan(const AugmentArgs& args) {
  Rbac rbac(args.rbac);
  rbac.require(Action::read, ArtifactClass::manifests, args.manifest);
  DatasetManifest manifest = read_manifest(args.manifest);
  DatasetManifest out =
      expand_dataset(manifest, load_specs(args.specs_file), split_from_string(args.split));
  const auto [neg, pos] = out.class_counts(Split::train);
  std::printf("train records after expansion: %zu\n", neg + pos);
  rbac.require(Action::write, ArtifactClass::manifests, args.out);
  write_manifest(out, args.out);
  std::printf("wrote %s\n", args.out.c_str());
  return kExitOk;
}

// ----------------------------------------------------------------- train --

struct TrainArgs {
  std::string manifest;
  std::string root;
  std::string salt;
  std::string backbone = "stub";
  int stub_channels = 64;
  int stub_side = 64;
  std::string out_dir;
  std::string config_file;
  std::string class_weights;  // "", "auto" or "w0,w1"
  TrainConfig cfg;
  int hidden_units = 512;
  double dropout_rate = 0.5;
  bool oversample_train = false;
  bool no_restore_best = false;
  bool no_timestamps = false;
  RbacOptions rbac;
};

// CLI flags > config file > defaults. Only fields not given on the command
// line are taken from the config file.
void apply_config_file(CLI::App* cmd, TrainArgs& args) {
  if (args.config_file.empty()) return;
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(args.config_file));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(args.config_file + ": " + e.what());
  }
  auto take = [&](const char* flag, const char* key, auto& target) {
    using T = std::decay_t<decltype(target)>;
    if (cmd->count(flag) == 0 && j.contains(key)) {
      target = j.at(key).get<T>();
    }
  };
  take("--manifest", "manifest", args.manifest);
  take("--root", "root", args.root);
  take("--salt", "salt", args.salt);
  take("--backbone", "backbone", args.backbone);
  take("--stub-channels", "stub_channels", args.stub_channels);
  take("--stub-side", "stub_side", args.stub_side);
  take("--out", "output_dir", args.out_dir);
  take("--lr", "learning_rate", args.cfg.learning_rate);
  take("--batch-size", "batch_size", args.cfg.batch_size);
  take("--epochs", "max_epochs", args.cfg.max_epochs);
  take("--patience", "early_stop_patience", args.cfg.early_stop_patience);
  take("--seed", "seed", args.cfg.seed);
  take("--hidden-units", "hidden_units", args.hidden_units);
  take("--dropout", "dropout_rate", args.dropout_rate);
  take("--class-weights", "class_weights", args.class_weights);
  if (cmd->count("--oversample") == 0 && j.contains("oversample")) {
    args.oversample_train = j.at("oversample").get<bool>();
  }
}

void write_train_config(const fs::path& path, const TrainArgs& args, const TrainConfig& cfg,
                        const BackboneSpec& spec, const HeadConfig& head) {
  ordered_json j;
  j["backbone"] = to_string(spec.name);
  j["input_side"] = spec.input_side;
  j["feature_channels"] = spec.feature_channels;
  j["frozen"] = spec.frozen;
  j["hidden_units"] = head.hidden_units;
  j["dropout_rate"] = head.dropout_rate;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["early_stop_patience"] = cfg.early_stop_patience;
  j["adagrad_epsilon"] = cfg.adagrad_epsilon;
  j["min_improvement"] = cfg.min_improvement;
  j["seed"] = cfg.seed;
  if (cfg.class_weights) {
    j["class_weights"] = {cfg.class_weights->first, cfg.class_weights->second};
  } else {
    j["class_weights"] = nullptr;
  }
  j["restore_best"] = cfg.restore_best;
  j["oversample"] = args.oversample_train;
  j["manifest"] = args.manifest;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

int cmd_train(CLI::App* cmd, TrainArgs& args) {
  apply_config_file(cmd, args);
  Rbac rbac(args.rbac);

  if (args.manifest.empty()) {
    throw ConfigError("--manifest is required (directly or via --config)");
  }
  rbac.require(Action::read, ArtifactClass::manifests, args.manifest);
  DatasetManifest manifest = read_manifest(args.manifest);
  if (args.root.empty()) args.root = manifest.corpus_root;
  if (args.root.empty()) {
    throw ConfigError("--root is required (manifest metadata has no corpus_root)");
  }

  if (args.oversample_train) {
    manifest = oversample(manifest, args.cfg.seed);
  }

  TrainConfig cfg = args.cfg;
  cfg.restore_best = !args.no_restore_best;
  if (args.class_weights == "auto") {
    cfg.class_weights = class_weights_from_manifest(manifest);
  } else if (!args.class_weights.empty()) {
    double w0 = 0, w1 = 0;
    if (std::sscanf(args.class_weights.c_str(), "%lf,%lf", &w0, &w1) != 2) {
      throw ConfigError("--class-weights expects 'auto' or 'w0,w1'");
    }
    cfg.class_weights = {w0, w1};
  }

  BackboneSpec spec = BackboneSpec::for_name(backbone_from_string(args.backbone),
                                             args.stub_channels, args.stub_side);
  HeadConfig head;
  head.hidden_units = args.hidden_units;
  head.dropout_rate = args.dropout_rate;

  Classifier clf = build_classifier(spec, head, cfg.seed);

  ManifestSource train_set(manifest, Split::train, args.root, args.salt, spec.input_side);
  ManifestSource val_set(manifest, Split::val, args.root, args.salt, spec.input_side);
  if (train_set.skipped_non_image() + val_set.skipped_non_image() > 0) {
    std::printf("note: skipped %zu non-image records (training consumes color frames)\n",
                train_set.skipped_non_image() + val_set.skipped_non_image());
  }

  TrainResult result = train(clf, train_set, val_set, cfg);
  for (const auto& e : result.history) {
    std::printf("epoch %3d  train_loss %.6f  train_acc %.4f  val_loss %.6f  val_acc %.4f\n",
                e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy);
  }
  std::printf("stopped: %s; best epoch %d\n",
              result.stop_reason == StopReason::early_stop ? "early (validation loss)"
                                                           : "max epochs reached",
              result.best_epoch);

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  rbac.require(Action::write, ArtifactClass::checkpoints, (out_dir / "best.ckpt").string());

  Classifier best = clf;
  set_head_parameters(best, result.best_parameters);
  save_checkpoint(best, out_dir / "best.ckpt");
  Classifier last = clf;
  set_head_parameters(last, result.last_parameters);
  save_checkpoint(last, out_dir / "last.ckpt");

  rbac.require(Action::write, ArtifactClass::reports, (out_dir / "history.csv").string());
  write_history_csv(out_dir / "history.csv", result.history, !args.no_timestamps);
  write_train_config(out_dir / "train_config.json", args, cfg, spec, head);
  std::printf("wrote %s/{best.ckpt,last.ckpt,history.csv,train_config.json}\n",
              args.out_dir.c_str());
  return kExitOk;
}

// -------------------------------------------------------------- evaluate --

struct EvaluateArgs {
  std::string checkpoint;
  std::string manifest;
  std::string root;
  std::string salt;
  std::string split = "val";
  std::string out;
  std::string roc_out;
  std::string groups_attr;
  std::string model_name;
  double threshold = 0.5;
  RbacOptions rbac;
};

int cmd_evaluate(const EvaluateArgs& args) {
  Rbac rbac(args.rbac);
  rbac.require(Action::read, ArtifactClass::checkpoints, args.checkpoint);
  Classifier clf = load_checkpoint(args.checkpoint);

  rbac.require(Action::read, ArtifactClass::manifests, args.manifest);
  DatasetManifest manifest = read_manifest(args.manifest);
  std::string root = args.root.empty() ? manifest.corpus_root : args.root;
  if (root.empty()) {
    throw ConfigError("--root is required (manifest metadata has no corpus_root)");
  }

  ManifestSource source(manifest, split_from_string(args.split), root, args.salt,
                        clf.backbone.input_side);
  if (source.size() == 0) {
    throw ConfigError("split '" + args.split + "' has no image samples");
  }

  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(source.size());
  for (size_t i = 0; i < source.size(); ++i) {
    const Eigen::VectorXd p = forward(clf, {source.image(i)}, false);
    scores.push_back(p(0));
    labels.push_back(source.label(i));
  }

  EvalReport report;
  if (!args.groups_attr.empty()) {
    const auto groups = source.attribute_column(args.groups_attr);
    report = subgroup_disparity(scores, labels, groups, args.threshold);
    // Subgroup mode tolerates single-class slices; the top split must still
    // carry both classes.
    if (!report.auc) {
      throw UndefinedMetricError("split '" + args.split + "' lacks both classes");
    }
  } else {
    report = evaluate(scores, labels, args.threshold, true);
  }

  const std::string model =
      args.model_name.empty() ? to_string(clf.backbone.name) : args.model_name;
  rbac.require(Action::write, ArtifactClass::reports, args.out);
  {
    std::ofstream out(args.out);
    if (!out) throw IoError("cannot write " + args.out);
    out << report_to_json(report, model, args.split);
  }
  if (!args.roc_out.empty()) {
    write_roc_csv(args.roc_out, roc_curve(scores, labels));
  }
  std::printf("n=%lld accuracy=%.4f auc=%.4f\n", report.n, report.accuracy,
              report.auc ? *report.auc : -1.0);
  std::printf("wrote %s\n", args.out.c_str());
  return kExitOk;
}

// --------------------------------------------------------------- compare --

struct CompareArgs {
  std::vector<std::string> reports;
  std::string format = "markdown";
  std::string out;
  bool extended = false;
  RbacOptions rbac;
};

int cmd_compare(const CompareArgs& args) {
  Rbac rbac(args.rbac);
  std::vector<fs::path> files;
  for (const auto& r : args.reports) {
    rbac.require(Action::read, ArtifactClass::reports, r);
    files.emplace_back(r);
  }
  const std::string rendered = render_comparison(
      load_comparison_inputs(files), report_format_from_string(args.format), args.extended);
  if (args.out.empty()) {
    std::fputs(rendered.c_str(), stdout);
  } else {
    std::ofstream out(args.out);
    if (!out) throw IoError("cannot write " + args.out);
    out << rendered;
    std::printf("wrote %s\n", args.out.c_str());
  }
  return kExitOk;
}

// ----------------------------------------------------------------- audit --

struct AuditArgs {
  std::string manifest;
  std::string table;
  std::vector<std::string> qi;
  std::string sensitive;
  size_t k = 0;
  size_t l = 0;
  std::string names_file;
  RbacOptions rbac;
};

int cmd_audit(const AuditArgs& args) {
  Rbac rbac(args.rbac);
  if (args.manifest.empty() && args.table.empty()) {
    throw ConfigError("audit needs --manifest or --table");
  }

  bool violations = false;
  std::optional<DatasetManifest> manifest;
  std::optional<QuasiIdentifierTable> table;

  if (!args.manifest.empty()) {
    rbac.require(Action::read, ArtifactClass::manifests, args.manifest);
    manifest = read_manifest(args.manifest);
    table = table_from_manifest(*manifest);
  } else {
    table = read_csv_table(args.table);
  }

  if (args.k > 0 || args.l > 0) {
    if (args.qi.empty()) {
      throw ConfigError("k-anonymity/l-diversity need --qi columns");
    }
    table->quasi_identifiers = args.qi;
    if (!args.sensitive.empty()) table->sensitive_column = args.sensitive;
  }

  if (args.k > 0) {
    const AuditResult result = k_anonymity(*table, args.k);
    std::printf("k-anonymity (k=%zu): %s, %zu violating classes\n", args.k,
                result.pass ? "PASS" : "FAIL", result.violations.size());
    for (const auto& v : result.violations) {
      std::string key;
      for (const auto& part : v.key) key += (key.empty() ? "" : "|") + part;
      std::printf("  class [%s] has %zu rows\n", key.c_str(), v.count);
    }
    violations |= !result.pass;
  }

  if (args.l > 0) {
    const AuditResult result = l_diversity(*table, args.l);
    std::printf("l-diversity (l=%zu): %s, %zu violating classes\n", args.l,
                result.pass ? "PASS" : "FAIL", result.violations.size());
    for (const auto& v : result.violations) {
      std::string key;
      for (const auto& part : v.key) key += (key.empty() ? "" : "|") + part;
      std::printf("  class [%s] has %zu distinct sensitive values\n", key.c_str(), v.count);
    }
    violations |= !result.pass;
  }

  if (!args.names_file.empty()) {
    if (!manifest) {
      throw ConfigError("anonymization audit needs --manifest");
    }
    std::vector<std::string> names;
    std::ifstream in(args.names_file);
    if (!in) throw IoError("cannot open " + args.names_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) names.push_back(line);
    }
    const AnonymizationAudit audit = anonymization_audit(*manifest, names);
    std::printf("anonymization: %s, %zu findings\n", audit.pass ? "PASS" : "FAIL",
                audit.findings.size());
    for (const auto& f : audit.findings) {
      std::printf("  record %zu field %s leaks '%s'\n", f.record_index, f.field.c_str(),
                  f.name.c_str());
    }
    violations |= !audit.pass;
  }

  return violations ? kExitViolation : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");
  CLI::App app{"ASD screening pipeline: ingest, train, evaluate, compare, audit"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "scan a corpus into a pseudonymized manifest");
  ingest->add_option("--root", ingest_args.root, "corpus root directory")->required();
  ingest->add_option("--salt", ingest_args.salt, "pseudonymization salt")->required();
  ingest->add_option("--out", ingest_args.out, "output manifest (JSON Lines)")->required();
  ingest->add_flag("--no-timestamps", ingest_args.no_timestamps,
                   "omit timestamps for byte-reproducible output");
  add_rbac_flags(ingest, ingest_args.rbac);

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "assign train/val/test splits");
  split->add_option("--manifest", split_args.manifest, "input manifest")->required();
  split->add_option("--out", split_args.out, "output manifest")->required();
  split->add_option("--train", split_args.cfg.train_fraction, "train fraction");
  split->add_option("--val", split_args.cfg.val_fraction, "val fraction");
  split->add_option("--test", split_args.cfg.test_fraction, "test fraction");
  split->add_option("--seed", split_args.cfg.seed, "shuffle seed");
  split->add_flag("--image-level", split_args.cfg.image_level,
                  "split per record instead of per subject");
  split->add_flag("--no-stratify", split_args.no_stratify, "ignore class balance");
  add_rbac_flags(split, split_args.rbac);

  AugmentArgs augment_args;
  auto* augment = app.add_subcommand("augment-plan",
                                     "expand train records with the 7-transform plan");
  augment->add_option("--manifest", augment_args.manifest, "input manifest")->required();
  augment->add_option("--out", augment_args.out, "output manifest")->required();
  augment->add_option("--specs", augment_args.specs_file,
                      "JSON array of 7 augmentation tags (default: built-in plan)");
  augment->add_option("--split", augment_args.split, "split to expand (train only)");
  add_rbac_flags(augment, augment_args.rbac);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a classifier head");
  train_cmd->add_option("--manifest", train_args.manifest, "manifest with splits");
  train_cmd->add_option("--root", train_args.root, "corpus root (default: manifest metadata)");
  train_cmd->add_option("--salt", train_args.salt, "pseudonymization salt")->required();
  train_cmd->add_option("--backbone", train_args.backbone,
                        "vgg19|xception|resnet50v2|mobilenetv2|efficientnetb0|stub");
  train_cmd->add_option("--stub-channels", train_args.stub_channels, "stub feature channels");
  train_cmd->add_option("--stub-side", train_args.stub_side, "stub input side");
  train_cmd->add_option("--out", train_args.out_dir, "output directory")->required();
  train_cmd->add_option("--lr", train_args.cfg.learning_rate, "learning rate");
  train_cmd->add_option("--batch-size", train_args.cfg.batch_size, "batch size");
  train_cmd->add_option("--epochs", train_args.cfg.max_epochs, "max epochs");
  train_cmd->add_option("--patience", train_args.cfg.early_stop_patience,
                        "early-stop patience (epochs)");
  train_cmd->add_option("--seed", train_args.cfg.seed, "experiment seed");
  train_cmd->add_option("--hidden-units", train_args.hidden_units, "head hidden units");
  train_cmd->add_option("--dropout", train_args.dropout_rate, "head dropout rate");
  train_cmd->add_option("--class-weights", train_args.class_weights,
                        "'auto' or 'w0,w1' class re-weighting");
  train_cmd->add_flag("--oversample", train_args.oversample_train,
                      "duplicate minority train records to parity");
  train_cmd->add_flag("--no-restore-best", train_args.no_restore_best,
                      "keep last-epoch weights as the result");
  train_cmd->add_flag("--no-timestamps", train_args.no_timestamps,
                      "zero the elapsed column for byte-reproducible runs");
  train_cmd->add_option("--config", train_args.config_file,
                        "JSON config; CLI flags take precedence");
  add_rbac_flags(train_cmd, train_args.rbac);

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on one split");
  evaluate->add_option("--checkpoint", eval_args.checkpoint, "classifier checkpoint")
      ->required();
  evaluate->add_option("--manifest", eval_args.manifest, "manifest with splits")->required();
  evaluate->add_option("--root", eval_args.root, "corpus root (default: manifest metadata)");
  evaluate->add_option("--salt", eval_args.salt, "pseudonymization salt")->required();
  evaluate->add_option("--split", eval_args.split, "split to evaluate (train|val|test)");
  evaluate->add_option("--out", eval_args.out, "report JSON path")->required();
  evaluate->add_option("--roc", eval_args.roc_out, "ROC curve CSV path");
  evaluate->add_option("--groups", eval_args.groups_attr,
                       "attribute key for subgroup metrics");
  evaluate->add_option("--threshold", eval_args.threshold, "decision threshold");
  evaluate->add_option("--model-name", eval_args.model_name, "name used in reports");
  add_rbac_flags(evaluate, eval_args.rbac);

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "render a model comparison table");
  compare->add_option("reports", compare_args.reports, "report files")->required();
  compare->add_option("--format", compare_args.format, "markdown|csv|json");
  compare->add_flag("--extended", compare_args.extended, "include precision/recall");
  compare->add_option("--out", compare_args.out, "write table here instead of stdout");
  add_rbac_flags(compare, compare_args.rbac);

  AuditArgs audit_args;
  auto* audit = app.add_subcommand("audit", "privacy audits over a manifest or table");
  audit->add_option("--manifest", audit_args.manifest, "manifest to audit");
  audit->add_option("--table", audit_args.table, "CSV table to audit");
  audit->add_option("--qi", audit_args.qi, "quasi-identifier columns")->delimiter(',');
  audit->add_option("--sensitive", audit_args.sensitive, "sensitive column (l-diversity)");
  audit->add_option("--k", audit_args.k, "k-anonymity threshold");
  audit->add_option("--l", audit_args.l, "l-diversity threshold");
  audit->add_option("--names", audit_args.names_file,
                    "file of original subject names (anonymization audit)");
  add_rbac_flags(audit, audit_args.rbac);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_args);
    if (*split) return cmd_split(split_args);
    if (*augment) return cmd_augment_plan(augment_args);
    if (*train_cmd) return cmd_train(train_cmd, train_args);
    if (*evaluate) return cmd_evaluate(eval_args);
    if (*compare) return cmd_compare(compare_args);
    if (*audit) return cmd_audit(audit_args);
  } catch (const UndefinedMetricError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitViolation;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitOk;
}

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "diarize/audio.hpp"
#include "diarize/config.hpp"
#include "diarize/pipeline.hpp"
#include "diarize/plda.hpp"
#include "diarize/rttm.hpp"
#include "diarize/synthgen.hpp"

namespace fs = std::filesystem;
using namespace diarize;

namespace {

std::string config_help() {
  std::ostringstream os;
  os << "Config keys (file lines `key = value`, or --set key=value):\n";
  const PipelineConfig defaults;
  for (const auto& key : config_keys()) os << "  " << key << " (default " << defaults.get(key) << ")\n";
  os << "The DIARIZE_CONFIG environment variable names a default config file.\n";
  return os.str();
}

PipelineConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  PipelineConfig cfg = path.empty() ? PipelineConfig{} : load_config_file(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

struct DiarizeArgs {
  std::string wav;
  std::string oracle;
  std::string scores;
  std::string embeddings;
  std::string plda;
  std::string out = ".";
  bool dump = false;
  std::uint64_t seed = 0;
  double p_correct = 0.95;
  double separation = 100.0;
};

void cmd_diarize(const DiarizeArgs& a, const PipelineConfig& cfg) {
  PipelineInputs in;
  in.seed = a.seed;
  in.p_correct = a.p_correct;
  in.separation_ratio = a.separation;
  if (!a.wav.empty()) in.audio = load_wav(a.wav);
  if (!a.oracle.empty()) in.script = read_script(fs::path(a.oracle));
  if (!a.plda.empty()) in.plda = load_plda(fs::path(a.plda));

  const std::int64_t samples = in.audio ? static_cast<std::int64_t>(in.audio->samples.size())
                                        : std::llround(in.script ? in.script->duration_s * cfg.sample_rate_hz : 0.0);
  const std::size_t chunks = samples > 0 ? chunk_layout(samples, cfg).size() : 0;
  const auto frames = static_cast<std::size_t>(frames_for_samples(cfg.window_samples(), cfg.frame_rate()));
  std::vector<std::string> warnings;
  if (!a.scores.empty()) {
    in.scores = import_scores(fs::path(a.scores), chunks, frames,
                              static_cast<std::size_t>(powerset_size(cfg.max_local_speakers, cfg.max_overlap)),
                              &warnings);
  }
  if (!a.embeddings.empty()) {
    in.embeddings = import_embeddings(fs::path(a.embeddings), chunks, static_cast<std::size_t>(cfg.max_local_speakers),
                                      static_cast<std::size_t>(cfg.embedding_dim), &warnings);
  }
  print_warnings(warnings);

  const PipelineRun run = diarize::run(in, cfg);
  ensure_dir(a.out);
  const fs::path rttm = fs::path(a.out) / (run.recording_id + ".rttm");
  write_rttm(rttm, run.annotation);
  if (a.dump) write_dump(run, fs::path(a.out) / (run.recording_id + ".dump"));

  std::cerr << "wrote " << rttm.string() << ": " << run.annotation.size() << " segments, "
            << run.annotation.labels().size() << " speakers\n";
  for (const auto& t : run.timings) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %-15s %8.2f ms\n", t.stage.c_str(), t.milliseconds);
    std::cerr << buf;
  }
}

void cmd_score(const std::string& ref, const std::string& hyp, double collar, bool skip_overlap) {
  const Annotation r = read_rttm(fs::path(ref));
  const Annotation h = read_rttm(fs::path(hyp));
  const DerBreakdown d = der(r, h, DerOptions{collar, skip_overlap});
  char buf[64];
  std::snprintf(buf, sizeof(buf), "miss %.3f\n", d.t_miss);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "false_alarm %.3f\n", d.t_fa);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "confusion %.3f\n", d.t_conf);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "reference %.3f\n", d.t_ref);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "DER %.2f%%\n", 100.0 * d.der);
  std::cout << buf;
}

struct SynthArgs {
  MeetingSpec spec;
  std::string out = ".";
  std::string name = "meeting";
  bool with_scores = false;
  bool with_embeddings = false;
  double p_correct = 0.95;
  double separation = 100.0;
};

void cmd_synth(SynthArgs a, const PipelineConfig& cfg) {
  GroundTruthScript script = generate(a.spec);
  script.recording_id = a.name;
  ensure_dir(a.out);
  const fs::path base = fs::path(a.out) / a.name;
  write_script(fs::path(base.string() + ".rttm"), script);
  if (!a.with_scores && !a.with_embeddings) return;

  PipelineInputs in;
  in.script = script;
  in.seed = a.spec.rng_seed;
  in.p_correct = a.p_correct;
  in.separation_ratio = a.separation;
  in.plda = generate_plda_model(cfg.embedding_dim, cfg.lda_dim, a.separation, a.spec.rng_seed);
  const PipelineRun run = diarize::run(in, cfg);
  if (a.with_scores) write_scores(fs::path(base.string() + ".scores"), run.scores);
  if (a.with_embeddings) {
    write_embeddings(fs::path(base.string() + ".emb"), run.embeddings);
    save_plda(fs::path(base.string() + ".plda"), *in.plda);
  }
}

void cmd_inspect(const std::string& dump, int block, const std::string& table) {
  const fs::path dir(dump);
  if (!fs::is_directory(dir)) throw IoError("dump directory '" + dir.string() + "' does not exist");
  std::vector<std::string> files;
  if (!table.empty()) {
    files.push_back(table.ends_with(".csv") ? table : table + ".csv");
  } else {
    for (const auto& [b, name] : dump_tables()) {
      if (b == block) files.push_back(name);
    }
    if (files.empty()) throw ConfigError("no dump table for block " + std::to_string(block));
  }
  for (const auto& name : files) {
    const fs::path p = dir / name;
    std::ifstream is(p);
    if (!is) throw IoError("cannot open '" + p.string() + "'");
    if (files.size() > 1) std::cout << "# " << name << '\n';
    std::cout << is.rdbuf();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker diarization by local segmentation and global embedding clustering"};
  app.footer(config_help());
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file")->envname("DIARIZE_CONFIG");
    sub->add_option("--set", overrides, "Override one config key (key=value); repeatable");
    sub->footer(config_help());
  };

  DiarizeArgs da;
  auto* diarize_cmd = app.add_subcommand("diarize", "Diarize a WAV file or an oracle script");
  add_config(diarize_cmd);
  diarize_cmd->add_option("wav", da.wav, "Input WAV file (optional with --oracle)");
  diarize_cmd->add_option("--oracle", da.oracle, "Script driving the oracle scorer and embedder");
  diarize_cmd->add_option("--scores", da.scores, "Imported powerset scores");
  diarize_cmd->add_option("--embeddings", da.embeddings, "Imported embeddings");
  diarize_cmd->add_option("--plda", da.plda, "PLDA model file (generated from --seed when absent)");
  diarize_cmd->add_option("--out", da.out, "Output directory")->capture_default_str();
  diarize_cmd->add_flag("--dump", da.dump, "Write CSV intermediates to <out>/<session>.dump");
  diarize_cmd->add_option("--seed", da.seed, "Seed for oracle backends and the generated PLDA")->capture_default_str();
  diarize_cmd->add_option("--p-correct", da.p_correct, "Oracle scorer confidence")->capture_default_str();
  diarize_cmd->add_option("--separation", da.separation, "Separation ratio of the generated PLDA")
      ->capture_default_str();

  std::string ref, hyp;
  double collar = 0.0;
  bool skip_overlap = false;
  auto* score_cmd = app.add_subcommand("score", "Diarization error rate of a hypothesis RTTM");
  score_cmd->add_option("reference", ref, "Reference RTTM")->required();
  score_cmd->add_option("hypothesis", hyp, "Hypothesis RTTM")->required();
  score_cmd->add_option("--collar", collar, "Seconds excluded around reference boundaries")->capture_default_str();
  score_cmd->add_flag("--skip-overlap", skip_overlap, "Ignore overlapped reference speech");

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic meeting script");
  add_config(synth_cmd);
  synth_cmd->add_option("--speakers", sa.spec.n_speakers, "Number of speakers")->capture_default_str();
  synth_cmd->add_option("--duration", sa.spec.duration_s, "Duration in seconds")->capture_default_str();
  synth_cmd->add_option("--mean-turn", sa.spec.mean_turn_s, "Mean turn length in seconds")->capture_default_str();
  synth_cmd->add_option("--overlap", sa.spec.overlap_fraction, "Target overlap fraction")->capture_default_str();
  synth_cmd->add_option("--silence", sa.spec.silence_fraction, "Target silence fraction")->capture_default_str();
  synth_cmd->add_option("--seed", sa.spec.rng_seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out", sa.out, "Output directory")->capture_default_str();
  synth_cmd->add_option("--name", sa.name, "Recording name")->capture_default_str();
  synth_cmd->add_flag("--with-scores", sa.with_scores, "Also write oracle scores (<name>.scores)");
  synth_cmd->add_flag("--with-embeddings", sa.with_embeddings,
                      "Also write synthetic embeddings and their PLDA model (<name>.emb, <name>.plda)");
  synth_cmd->add_option("--p-correct", sa.p_correct, "Oracle scorer confidence")->capture_default_str();
  synth_cmd->add_option("--separation", sa.separation, "Separation ratio of the PLDA model")->capture_default_str();

  std::string dump_dir, table;
  int block = 6;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print CSV intermediates of a dump");
  inspect_cmd->add_option("dump", dump_dir, "Dump directory written by diarize --dump")->required();
  inspect_cmd->add_option("--block", block, "Stage number 1-7")->capture_default_str();
  inspect_cmd->add_option("--table", table, "Table name (e.g. coverage); overrides --block");

  int dim = 256, lda = 128;
  double ratio = 100.0;
  std::uint64_t plda_seed = 0;
  std::string plda_out = "plda.txt";
  auto* plda_cmd = app.add_subcommand("plda-gen", "Write a random PLDA model");
  plda_cmd->add_option("--dim", dim, "Embedding dimension")->capture_default_str();
  plda_cmd->add_option("--lda", lda, "LDA dimension")->capture_default_str();
  plda_cmd->add_option("--ratio", ratio, "Across/within variance ratio")->capture_default_str();
  plda_cmd->add_option("--seed", plda_seed, "Random seed")->capture_default_str();
  plda_cmd->add_option("--out", plda_out, "Output file")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (diarize_cmd->parsed()) {
      if (da.wav.empty() && da.oracle.empty()) throw ConfigError("diarize needs a WAV file, --oracle SCRIPT, or both");
      cmd_diarize(da, resolve_config(config_path, overrides));
    } else if (score_cmd->parsed()) {
      cmd_score(ref, hyp, collar, skip_overlap);
    } else if (synth_cmd->parsed()) {
      cmd_synth(sa, resolve_config(config_path, overrides));
    } else if (inspect_cmd->parsed()) {
      cmd_inspect(dump_dir, block, table);
    } else if (plda_cmd->parsed()) {
      save_plda(fs::path(plda_out), generate_plda_model(dim, lda, ratio, plda_seed));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

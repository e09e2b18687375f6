// evtcrypt — command-line front end for the event-stream encryption toolkit.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 key error.
// Summaries are single JSON lines on stdout; diagnostics go to stderr.
// All output files are staged to temporaries and renamed only after every
// write succeeded, so a failing command never leaves partial outputs behind.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "evtcrypt/evtcrypt.hpp"
#include "json.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace evtcrypt;

// Missing/garbled secrets and other pre-execution problems: exit code 1.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double elapsed_ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

uint64_t parse_u64(const std::string& text, const char* what) {
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(text, &used, 0);  // base 0: decimal or 0x…
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw usage_error(std::string(what) + " is not a valid 64-bit integer");
  }
}

// The key secret comes from the environment or an interactive prompt, never
// from argv, where it would leak into process listings.
uint64_t get_secret() {
  if (const char* env = std::getenv("EVTCRYPT_SECRET"))
    return parse_u64(env, "EVTCRYPT_SECRET");
  if (isatty(STDIN_FILENO)) {
    std::cerr << "key secret (64-bit integer): " << std::flush;
    std::string line;
    if (std::getline(std::cin, line)) return parse_u64(line, "secret");
  }
  throw usage_error("no key secret: set EVTCRYPT_SECRET or run interactively");
}

// Collects finished file contents, then writes them all atomically: every
// payload goes to a sibling temporary first and the renames happen only
// after every temporary is safely on disk.
class OutputStage {
 public:
  void add(std::filesystem::path path, std::string bytes) {
    files_.emplace_back(std::move(path), std::move(bytes));
  }

  void commit() {
    std::vector<std::filesystem::path> temps;
    temps.reserve(files_.size());
    try {
      for (const auto& [path, bytes] : files_) {
        std::filesystem::path tmp = path;
        tmp += ".tmp";
        detail::write_file(tmp, bytes);
        temps.push_back(tmp);
      }
      for (size_t i = 0; i < files_.size(); ++i)
        std::filesystem::rename(temps[i], files_[i].first);
    } catch (...) {
      std::error_code ec;
      for (const auto& tmp : temps) std::filesystem::remove(tmp, ec);
      throw;
    }
  }

 private:
  std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

StreamFormat parse_format(const std::string& name) {
  return name == "binary" ? StreamFormat::binary : StreamFormat::text;
}

void add_format_flag(CLI::App* cmd, std::string& format) {
  cmd->add_option("--format", format, "Event file format for outputs")
      ->check(CLI::IsMember({"text", "binary"}))
      ->capture_default_str();
}

void print_summary(const json& j) { std::cout << j.dump() << "\n"; }

// Inserts ratio + flag fields for one SNR measurement; infinity has no JSON
// number, so the ratio is null when the noise count is zero.
void put_snr(json& j, const std::string& prefix, const SnrResult& r) {
  j[prefix + "_signal"] = r.signal;
  j[prefix + "_noise"] = r.noise;
  if (r.infinite)
    j[prefix + "_snr"] = nullptr;
  else
    j[prefix + "_snr"] = r.ratio;
  j[prefix + "_snr_infinite"] = r.infinite;
}

struct EncryptArgs {
  std::string in, out, key_out, labels_out;
  std::string mask = "full";
  std::string format = "text";
  EncryptConfig cfg;
};

void run_encrypt(const EncryptArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const uint64_t secret = get_secret();
  const EventStream stream = read_stream(a.in);

  EncryptConfig cfg = a.cfg;
  cfg.mask_mode = a.mask == "band" ? MaskMode::dilated_band : MaskMode::full_complement;
  const size_t mask_pixels = build_mask(stream, cfg).size();
  const EncryptedBundle bundle = encrypt(stream, cfg);

  OutputStage stage;
  stage.add(a.out, write_stream_string(bundle.stream, parse_format(a.format)));
  const uint64_t nonce = Splitmix64(cfg.seed)();
  stage.add(a.key_out, write_key_string(bundle.key_plane, secret, nonce));
  if (!a.labels_out.empty())
    stage.add(a.labels_out,
              write_labels_string(label_encrypted(stream, bundle.stream).labels));
  stage.commit();

  json j;
  j["command"] = "encrypt";
  j["input_events"] = stream.events.size();
  j["output_events"] = bundle.stream.events.size();
  j["mask_pixels"] = mask_pixels;
  j["key_pixels"] = bundle.key_plane.size();
  j["elapsed_ms"] = elapsed_ms_since(start);
  print_summary(j);
}

struct DecryptArgs {
  std::string in, key, out;
  std::string format = "text";
};

void run_decrypt(const DecryptArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const uint64_t secret = get_secret();
  const EventStream stream = read_stream(a.in);
  const SpatialPlane plane = read_key(a.key, secret);
  const EventStream recovered = decrypt(stream, plane);

  OutputStage stage;
  stage.add(a.out, write_stream_string(recovered, parse_format(a.format)));
  stage.commit();

  json j;
  j["command"] = "decrypt";
  j["input_events"] = stream.events.size();
  j["output_events"] = recovered.events.size();
  j["key_pixels"] = plane.size();
  j["elapsed_ms"] = elapsed_ms_since(start);
  print_summary(j);
}

struct AttackArgs {
  std::string in, out;
  std::string filter = "nnf";
  std::string labels, labels_from_original, labels_out;
  std::string format = "text";
  NnfConfig nnf;
  Voxel voxel{2, 2, 5000};
  uint64_t min_count = 2;
};

void run_attack(const AttackArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  if (!a.labels.empty() && !a.labels_from_original.empty())
    throw usage_error("--labels and --labels-from-original are mutually exclusive");

  const EventStream stream = read_stream(a.in);
  std::optional<LabeledStream> labeled;
  if (!a.labels.empty()) {
    LabeledStream ls;
    ls.stream = canonical_sort(stream);
    ls.labels = read_labels(a.labels);
    if (ls.labels.size() != ls.stream.events.size())
      throw data_error("label count does not match event count");
    labeled = std::move(ls);
  } else if (!a.labels_from_original.empty()) {
    labeled = label_encrypted(read_stream(a.labels_from_original), stream);
  }

  EventStream filtered;
  std::optional<LabeledStream> filtered_labeled;
  if (a.filter == "nnf") {
    if (labeled) {
      filtered_labeled = nnf_filter(*labeled, a.nnf);
      filtered = filtered_labeled->stream;
    } else {
      filtered = nnf_filter(stream, a.nnf);
    }
  } else {
    if (labeled) {
      filtered_labeled = density_filter(*labeled, a.voxel, a.min_count);
      filtered = filtered_labeled->stream;
    } else {
      filtered = density_filter(stream, a.voxel, a.min_count);
    }
  }

  OutputStage stage;
  stage.add(a.out, write_stream_string(filtered, parse_format(a.format)));
  if (!a.labels_out.empty()) {
    if (!filtered_labeled)
      throw usage_error("--labels-out needs --labels or --labels-from-original");
    stage.add(a.labels_out, write_labels_string(filtered_labeled->labels));
  }
  stage.commit();

  json j;
  j["command"] = "attack";
  j["filter"] = a.filter;
  j["input_events"] = stream.events.size();
  j["output_events"] = filtered.events.size();
  if (labeled) {
    put_snr(j, "pre", snr(*labeled));
    put_snr(j, "post", snr(*filtered_labeled));
  }
  j["elapsed_ms"] = elapsed_ms_since(start);
  print_summary(j);
}

struct FrameArgs {
  std::string in, out;
  uint64_t t0 = 0;
  uint64_t t1 = std::numeric_limits<uint64_t>::max();
};

void run_frame(const FrameArgs& a) {
  const EventStream stream = read_stream(a.in);
  const EventFrame frame = render_frame(stream, a.t0, a.t1);

  OutputStage stage;
  stage.add(a.out, to_pgm(frame));
  stage.commit();

  uint64_t in_window = 0;
  for (const Event& e : stream.events)
    if (e.t >= a.t0 && e.t <= a.t1) ++in_window;
  json j;
  j["command"] = "frame";
  j["width"] = frame.width;
  j["height"] = frame.height;
  j["window_events"] = in_window;
  print_summary(j);
}

void run_snr(const std::string& in, const std::string& labels_path) {
  LabeledStream ls;
  ls.stream = canonical_sort(read_stream(in));
  ls.labels = read_labels(labels_path);
  const SnrResult r = snr(ls);  // checks the label/event count match
  json j;
  j["command"] = "snr";
  j["events"] = ls.stream.events.size();
  put_snr(j, "measured", r);
  print_summary(j);
}

struct InjectArgs {
  std::string in, out, labels_out;
  double snr = 1.0;
  uint64_t seed = 0;
  std::string format = "text";
};

void run_inject(const InjectArgs& a) {
  const EventStream stream = read_stream(a.in);
  const LabeledStream mixed = inject_random_noise(stream, a.snr, a.seed);

  OutputStage stage;
  stage.add(a.out, write_stream_string(mixed.stream, parse_format(a.format)));
  const std::string labels_out = a.labels_out.empty() ? a.out + ".labels" : a.labels_out;
  stage.add(labels_out, write_labels_string(mixed.labels));
  stage.commit();

  json j;
  j["command"] = "inject";
  j["input_events"] = stream.events.size();
  j["injected_events"] = mixed.stream.events.size() - stream.events.size();
  j["output_events"] = mixed.stream.events.size();
  put_snr(j, "resulting", snr(mixed));
  print_summary(j);
}

struct GenArgs {
  std::string kind, out, labels_out;
  uint16_t width = 64;
  uint16_t height = 48;
  uint64_t duration = 1000000;
  uint64_t rate = 10000;
  uint64_t seed = 0;
  std::string format = "text";
};

void run_gen(const GenArgs& a) {
  const SceneKind kind =
      a.kind == "two-blobs" ? SceneKind::two_blobs : SceneKind::edge_sweep;
  const LabeledStream scene =
      generate_scene(kind, a.width, a.height, a.duration, a.rate, a.seed);

  OutputStage stage;
  stage.add(a.out, write_stream_string(scene.stream, parse_format(a.format)));
  if (!a.labels_out.empty()) stage.add(a.labels_out, write_labels_string(scene.labels));
  stage.commit();

  json j;
  j["command"] = "gen";
  j["kind"] = a.kind;
  j["events"] = scene.stream.events.size();
  j["width"] = a.width;
  j["height"] = a.height;
  j["duration_us"] = a.duration;
  j["rate"] = a.rate;
  print_summary(j);
}

struct BenchArgs {
  uint16_t width = 346;
  uint16_t height = 260;
  uint64_t events = 100000;
  uint64_t trials = 3;
};

void run_bench(const BenchArgs& a) {
  const BenchReport r = bench_encrypt(a.width, a.height, a.events, a.trials);
  json j;
  j["command"] = "bench";
  j["trials"] = r.trials;
  j["events_per_trial"] = r.events_per_trial;
  j["total_events"] = r.total_events;
  j["p50_ms"] = r.p50_ms;
  j["p95_ms"] = r.p95_ms;
  j["events_per_sec"] = r.events_per_sec;
  print_summary(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-stream encryption toolkit"};
  app.require_subcommand(1);

  EncryptArgs enc;
  CLI::App* c_enc = app.add_subcommand("encrypt", "Encrypt an event stream");
  c_enc->add_option("input", enc.in, "Input event file")->required();
  c_enc->add_option("output", enc.out, "Encrypted event file")->required();
  c_enc->add_option("key", enc.key_out, "Key file to write")->required();
  c_enc->add_option("--seed", enc.cfg.seed, "PRNG seed")->capture_default_str();
  c_enc->add_option("--sigma", enc.cfg.sigma, "Timestamp scaling factor (>= 0)")
      ->capture_default_str();
  c_enc->add_option("--tx", enc.cfg.spatial_threshold,
                    "Spatial neighbor threshold (inclusive L1, >= 1)")
      ->capture_default_str();
  c_enc->add_option("--tt", enc.cfg.t_threshold,
                    "Absolute temporal threshold in µs (default: adaptive)");
  c_enc->add_option("--mask", enc.mask, "Mask mode")
      ->check(CLI::IsMember({"full", "band"}))
      ->capture_default_str();
  c_enc->add_option("--band-radius", enc.cfg.band_radius,
                    "Band mask L1 radius (band mode only)")
      ->capture_default_str();
  c_enc->add_option("--labels-out", enc.labels_out,
                    "Also write ground-truth labels for the encrypted stream");
  add_format_flag(c_enc, enc.format);
  c_enc->callback([&] { run_encrypt(enc); });

  DecryptArgs dec;
  CLI::App* c_dec = app.add_subcommand("decrypt", "Decrypt an event stream");
  c_dec->add_option("input", dec.in, "Encrypted event file")->required();
  c_dec->add_option("key", dec.key, "Key file")->required();
  c_dec->add_option("output", dec.out, "Recovered event file")->required();
  add_format_flag(c_dec, dec.format);
  c_dec->callback([&] { run_decrypt(dec); });

  AttackArgs atk;
  CLI::App* c_atk = app.add_subcommand("attack", "Run a denoising attack");
  c_atk->add_option("input", atk.in, "Input event file")->required();
  c_atk->add_option("output", atk.out, "Filtered event file")->required();
  c_atk->add_option("--filter", atk.filter, "Filter kind")
      ->check(CLI::IsMember({"nnf", "density"}))
      ->capture_default_str();
  c_atk->add_option("--tx", atk.nnf.t_space, "NNf spatial threshold (strict L1)")
      ->capture_default_str();
  c_atk->add_option("--tt", atk.nnf.t_time, "NNf temporal threshold in µs (strict)")
      ->capture_default_str();
  c_atk->add_option("--min-neighbors,-k", atk.nnf.min_neighbors,
                    "NNf neighbor count needed to keep an event")
      ->capture_default_str();
  c_atk->add_option("--dx", atk.voxel.dx, "Density voxel width in px")
      ->capture_default_str();
  c_atk->add_option("--dy", atk.voxel.dy, "Density voxel height in px")
      ->capture_default_str();
  c_atk->add_option("--dt", atk.voxel.dt, "Density voxel depth in µs")
      ->capture_default_str();
  c_atk->add_option("--min-count", atk.min_count, "Density events to keep a voxel")
      ->capture_default_str();
  c_atk->add_option("--labels", atk.labels, "Labels for the input stream");
  c_atk->add_option("--labels-from-original", atk.labels_from_original,
                    "Derive input labels by matching against this original stream");
  c_atk->add_option("--labels-out", atk.labels_out, "Write post-filter labels");
  add_format_flag(c_atk, atk.format);
  c_atk->callback([&] { run_attack(atk); });

  FrameArgs frm;
  CLI::App* c_frm = app.add_subcommand("frame", "Render an event frame to PGM");
  c_frm->add_option("input", frm.in, "Input event file")->required();
  c_frm->add_option("output", frm.out, "PGM file to write")->required();
  c_frm->add_option("--t0", frm.t0, "Window start in µs (inclusive)")
      ->capture_default_str();
  c_frm->add_option("--t1", frm.t1, "Window end in µs (inclusive; default: all)");
  std::string frm_format = "text";  // accepted for interface uniformity; unused
  add_format_flag(c_frm, frm_format);
  c_frm->callback([&] { run_frame(frm); });

  std::string snr_in, snr_labels;
  CLI::App* c_snr = app.add_subcommand("snr", "Report the SNR of a labeled stream");
  c_snr->add_option("input", snr_in, "Input event file")->required();
  c_snr->add_option("labels", snr_labels, "Label sidecar file")->required();
  std::string snr_format = "text";  // accepted for interface uniformity; unused
  add_format_flag(c_snr, snr_format);
  c_snr->callback([&] { run_snr(snr_in, snr_labels); });

  InjectArgs inj;
  CLI::App* c_inj = app.add_subcommand("inject", "Blend uniform random noise in");
  c_inj->add_option("input", inj.in, "Input event file")->required();
  c_inj->add_option("output", inj.out, "Mixed event file")->required();
  c_inj->add_option("--snr", inj.snr, "Target signal/noise ratio (> 0)")
      ->capture_default_str();
  c_inj->add_option("--seed", inj.seed, "PRNG seed")->capture_default_str();
  c_inj->add_option("--labels-out", inj.labels_out,
                    "Label file to write (default: <output>.labels)");
  add_format_flag(c_inj, inj.format);
  c_inj->callback([&] { run_inject(inj); });

  GenArgs gen;
  CLI::App* c_gen = app.add_subcommand("gen", "Generate a synthetic scene");
  c_gen->add_option("kind", gen.kind, "Scene kind")
      ->check(CLI::IsMember({"edge-sweep", "two-blobs"}))
      ->required();
  c_gen->add_option("output", gen.out, "Event file to write")->required();
  c_gen->add_option("--width", gen.width, "Sensor width")->capture_default_str();
  c_gen->add_option("--height", gen.height, "Sensor height")->capture_default_str();
  c_gen->add_option("--duration", gen.duration, "Recording length in µs")
      ->capture_default_str();
  c_gen->add_option("--rate", gen.rate, "Events per second")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "PRNG seed")->capture_default_str();
  c_gen->add_option("--labels-out", gen.labels_out, "Also write all-signal labels");
  add_format_flag(c_gen, gen.format);
  c_gen->callback([&] { run_gen(gen); });

  BenchArgs ben;
  CLI::App* c_ben = app.add_subcommand("bench", "Benchmark encryption throughput");
  c_ben->add_option("--width", ben.width, "Sensor width")->capture_default_str();
  c_ben->add_option("--height", ben.height, "Sensor height")->capture_default_str();
  c_ben->add_option("--events", ben.events, "Events per trial")->capture_default_str();
  c_ben->add_option("--trials", ben.trials, "Trial count")->capture_default_str();
  std::string ben_format = "text";  // accepted for interface uniformity; unused
  add_format_flag(c_ben, ben_format);
  c_ben->callback([&] { run_bench(ben); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const key_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

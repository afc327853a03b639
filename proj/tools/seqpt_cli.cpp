// Command-line front end. Every subcommand accepts --config FILE, a JSON
// object whose keys are that subcommand's long flag names; flags given on the
// command line win over the file.

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqpt/analysis/reorder.hpp"
#include "seqpt/decoding/tuning.hpp"
#include "seqpt/model/checkpoint.hpp"
#include "seqpt/objectives/example_io.hpp"
#include "seqpt/pipeline/data.hpp"
#include "seqpt/pipeline/experiment.hpp"
#include "seqpt/pipeline/hashing.hpp"
#include "seqpt/pipeline/ingest.hpp"
#include "seqpt/pipeline/synthetic.hpp"
#include "seqpt/rouge/rouge.hpp"
#include "seqpt/text/segment.hpp"

namespace {

using nlohmann::json;
using namespace seqpt;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return json::parse(in);
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

// Fills options that were not given on the command line from `cfg`.
void merge_config(CLI::App* sub, const json& cfg) {
  for (CLI::Option* opt : sub->get_options()) {
    if (opt->count() > 0 || opt->get_lnames().empty()) continue;
    const auto it = cfg.find(opt->get_lnames().front());
    if (it == cfg.end() || it->is_object()) continue;
    if (it->is_array()) {
      for (const auto& v : *it) opt->add_result(scalar_text(v));
    } else {
      opt->add_result(scalar_text(*it));
    }
    opt->run_callback();
  }
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  CLI::Option* seed_opt = nullptr;
  std::uint64_t seed = 0;
  std::vector<CLI::Option*> required;
  std::function<void(const json&)> run;
};

// Required flags are checked after the config merge so either source counts.
CLI::Option* need(Command& c, CLI::Option* opt) {
  c.required.push_back(opt);
  return opt;
}

Command& add_command(std::vector<Command>& commands, CLI::App& root, const std::string& name,
                     const std::string& help, bool stochastic) {
  auto& c = commands.emplace_back();
  c.app = root.add_subcommand(name, help);
  c.app->add_option("--config", c.config_path, "JSON file with default flag values");
  if (stochastic) c.seed_opt = c.app->add_option("--seed", c.seed, "Random seed (mandatory)");
  return c;
}

void add_decode_flags(CLI::App* app, decoding::DecodeConfig& cfg) {
  app->add_option("--beam", cfg.beam_size, "Beam size")->capture_default_str();
  app->add_option("--min-len", cfg.min_len, "Minimum generated tokens before EOS")
      ->capture_default_str();
  app->add_option("--max-len", cfg.max_len, "Maximum generated tokens")->capture_default_str();
  app->add_flag("--block-trigrams,!--no-block-trigrams", cfg.block_repeated_trigrams,
                "Forbid repeated subword trigrams (default on)");
}

std::vector<decoding::EvalItem> eval_items(const std::string& pairs_path,
                                           const text::Vocabulary& vocab) {
  return pipeline::make_eval_items(pipeline::read_pairs_jsonl(pairs_path), vocab);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App root("Sequence-to-sequence pre-training toolkit");
  root.require_subcommand(1);
  std::vector<Command> commands;
  commands.reserve(16);

  // ingest
  {
    auto& c = add_command(commands, root, "ingest", "Normalize a corpus and report statistics", false);
    auto input = std::make_shared<std::string>();
    auto text_files = std::make_shared<std::vector<std::string>>();
    auto out = std::make_shared<std::string>();
    auto stats = std::make_shared<std::string>();
    c.app->add_option("--input", *input, "JSONL with {\"id\",\"text\"} records");
    c.app->add_option("--text-files", *text_files, "Plain-text files, one document each");
    need(c, c.app->add_option("--out", *out, "Canonical corpus JSONL"));
    c.app->add_option("--stats", *stats, "Stats JSON (default stdout)");
    c.run = [=](const json&) {
      if (input->empty() == text_files->empty()) {
        throw InvalidArgument("give exactly one of --input or --text-files");
      }
      const auto result = input->empty() ? pipeline::ingest_text_files(*text_files)
                                         : pipeline::ingest_jsonl(*input);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      text::write_corpus_jsonl(*out, result.docs);
      Output(*stats).stream() << pipeline::stats_json(result.stats).dump(2) << '\n';
    };
  }

  // gen-synthetic
  {
    auto& c = add_command(commands, root, "gen-synthetic", "Generate a template-grammar corpus", true);
    auto spec = std::make_shared<pipeline::SyntheticSpec>();
    auto out = std::make_shared<std::string>();
    auto pairs_out = std::make_shared<std::string>();
    c.app->add_option("--n-docs", spec->n_docs)->capture_default_str();
    c.app->add_option("--min-sentences", spec->min_sentences)->capture_default_str();
    c.app->add_option("--max-sentences", spec->max_sentences)->capture_default_str();
    c.app->add_option("--templates", spec->templates)->capture_default_str();
    c.app->add_option("--summary-sentences", spec->summary_sentences)->capture_default_str();
    c.app->add_option("--reorder-fraction", spec->reorder_fraction)->capture_default_str();
    c.app->add_option("--id-prefix", spec->id_prefix)->capture_default_str();
    c.app->add_option("--out", *out, "Corpus JSONL");
    c.app->add_option("--pairs-out", *pairs_out, "Document-summary pairs JSONL");
    const auto* cmd = &c;
    c.run = [=](const json&) {
      if (out->empty() && pairs_out->empty()) throw InvalidArgument("nothing to write");
      if (!out->empty()) text::write_corpus_jsonl(*out, pipeline::gen_corpus(*spec, cmd->seed));
      if (!pairs_out->empty()) {
        pipeline::write_pairs_jsonl(*pairs_out, pipeline::gen_pairs(*spec, cmd->seed));
      }
    };
  }

  // train-bpe
  {
    auto& c = add_command(commands, root, "train-bpe", "Learn a byte-level BPE vocabulary", false);
    auto corpus = std::make_shared<std::string>();
    auto pairs = std::make_shared<std::string>();
    auto size = std::make_shared<std::size_t>(1024);
    auto out = std::make_shared<std::string>();
    c.app->add_option("--corpus", *corpus, "Corpus JSONL");
    c.app->add_option("--pairs", *pairs, "Optional pairs JSONL added to the training text");
    c.app->add_option("--vocab-size", *size)->capture_default_str();
    need(c, c.app->add_option("--out", *out, "Vocabulary file"));
    c.run = [=](const json&) {
      std::vector<text::RawDocument> docs;
      if (!corpus->empty()) docs = text::read_corpus_jsonl(*corpus);
      if (!pairs->empty()) {
        for (const auto& p : pipeline::read_pairs_jsonl(*pairs)) {
          docs.push_back({"pair:" + p.id, p.document});
          docs.push_back({"summary:" + p.id, p.summary});
        }
      }
      const auto vocab = text::train_bpe(docs, *size);
      vocab.save(*out);
      std::cout << json{{"vocab_size", vocab.size()}, {"merges", vocab.merges().size()}}.dump()
                << '\n';
    };
  }

  // make-pretrain-data
  {
    auto& c = add_command(commands, root, "make-pretrain-data", "Build pre-training examples", true);
    struct Opts {
      std::string corpus, vocab, out, objective = "all", nsg_split = "random";
      std::size_t span_min = 100, span_max = 256, target_len = 256, piece_len = 512;
      std::size_t max_input = 512, max_target = 256;
    };
    auto o = std::make_shared<Opts>();
    need(c, c.app->add_option("--corpus", o->corpus));
    need(c, c.app->add_option("--vocab", o->vocab));
    c.app->add_option("--out", o->out, "Examples JSONL (default stdout)");
    c.app->add_option("--objective", o->objective, "sr, nsg, mdg or all")->capture_default_str();
    c.app->add_option("--span-min", o->span_min)->capture_default_str();
    c.app->add_option("--span-max", o->span_max)->capture_default_str();
    c.app->add_option("--target-len", o->target_len)->capture_default_str();
    c.app->add_option("--piece-len", o->piece_len)->capture_default_str();
    c.app->add_option("--nsg-split", o->nsg_split, "random or piece-boundary")->capture_default_str();
    c.app->add_option("--max-input", o->max_input)->capture_default_str();
    c.app->add_option("--max-target", o->max_target)->capture_default_str();
    const auto* cmd = &c;
    c.run = [=](const json&) {
      pipeline::RunConfig rc;
      rc.span_min = o->span_min;
      rc.span_max = o->span_max;
      rc.target_len = o->target_len;
      rc.nsg_split = o->nsg_split;
      rc.max_source_len = o->max_input;
      rc.max_target_len = o->max_target;
      const auto cfg = rc.objective_config();
      cfg.span.validate();
      const auto examples = pipeline::make_pretrain_data(
          text::read_corpus_jsonl(o->corpus), text::Vocabulary::load(o->vocab),
          pipeline::parse_objective_choice(o->objective), cfg, cmd->seed, o->piece_len);
      Output out(o->out);
      objectives::write_examples_jsonl(out.stream(), examples);
      std::cerr << examples.size() << " examples\n";
    };
  }

  // pretrain
  {
    auto& c = add_command(commands, root, "pretrain", "Pre-train on an examples file", true);
    struct Opts {
      std::string data, valid, out, resume, vocab;
      std::size_t steps = 1000, batch_size = 16, eval_every = 100;
    };
    auto o = std::make_shared<Opts>();
    need(c, c.app->add_option("--data", o->data, "Examples JSONL"));
    c.app->add_option("--valid", o->valid, "Validation examples JSONL");
    c.app->add_option("--vocab", o->vocab, "Vocabulary (sets the model vocabulary size)");
    c.app->add_option("--ckpt", o->resume, "Resume from this checkpoint");
    need(c, c.app->add_option("--out", o->out, "Checkpoint to write"));
    c.app->add_option("--steps", o->steps)->capture_default_str();
    c.app->add_option("--batch-size", o->batch_size)->capture_default_str();
    c.app->add_option("--eval-every", o->eval_every)->capture_default_str();
    const auto* cmd = &c;
    c.run = [=](const json& cfg) {
      const auto train = objectives::read_examples_jsonl(o->data);
      const auto valid = o->valid.empty() ? std::vector<objectives::PretrainExample>{}
                                          : objectives::read_examples_jsonl(o->valid);
      std::optional<model::Trainer<float>> trainer;
      if (!o->resume.empty()) {
        trainer.emplace(model::load_checkpoint<float>(o->resume));
      } else {
        auto mcfg = cfg.value("model", json::object()).get<model::ModelConfig>();
        if (!o->vocab.empty()) mcfg.vocab_size = text::Vocabulary::load(o->vocab).size();
        const auto opt = cfg.value("optimizer", json(model::OptimizerConfig::pretrain_defaults()))
                             .get<model::OptimizerConfig>();
        trainer.emplace(mcfg, opt, derive_seed(cmd->seed, "model"));
      }
      const auto report = pipeline::pretrain(*trainer, train, valid, o->steps, o->batch_size,
                                             o->eval_every, derive_seed(cmd->seed, "pretrain-batches"));
      model::save_checkpoint(o->out, *trainer, {{"seed", cmd->seed}, {"stage", "pretrain"}});
      std::cout << json{{"seed", cmd->seed},
                        {"valid_perplexity", pipeline::curve_json(report.valid_perplexity)},
                        {"train_loss", pipeline::curve_json(report.train_loss)},
                        {"objective_draws",
                         pipeline::draws_json(report.draws, {})}}
                       .dump(2)
                << '\n';
    };
  }

  // finetune
  {
    auto& c = add_command(commands, root, "finetune", "Fine-tune a checkpoint on pairs", true);
    struct Opts {
      std::string ckpt, pairs, vocab, out;
      std::size_t steps = 1000, batch_size = 16, eval_every = 100;
      std::size_t max_source = 512, max_target = 256;
    };
    auto o = std::make_shared<Opts>();
    need(c, c.app->add_option("--ckpt", o->ckpt));
    need(c, c.app->add_option("--pairs", o->pairs, "Document-summary pairs JSONL"));
    need(c, c.app->add_option("--vocab", o->vocab));
    need(c, c.app->add_option("--out", o->out, "Checkpoint to write"));
    c.app->add_option("--steps", o->steps)->capture_default_str();
    c.app->add_option("--batch-size", o->batch_size)->capture_default_str();
    c.app->add_option("--eval-every", o->eval_every)->capture_default_str();
    c.app->add_option("--max-source", o->max_source)->capture_default_str();
    c.app->add_option("--max-target", o->max_target)->capture_default_str();
    const auto* cmd = &c;
    c.run = [=](const json& cfg) {
      auto trainer = model::load_checkpoint<float>(o->ckpt);
      trainer.reset_optimizer(cfg.value("optimizer", json(model::OptimizerConfig::finetune_defaults()))
                                  .get<model::OptimizerConfig>());
      const auto data = pipeline::make_finetune_data(pipeline::read_pairs_jsonl(o->pairs),
                                                     text::Vocabulary::load(o->vocab),
                                                     o->max_source, o->max_target);
      const auto curve = pipeline::finetune(trainer, data, o->steps, o->batch_size, o->eval_every,
                                            derive_seed(cmd->seed, "finetune-batches"));
      model::save_checkpoint(o->out, trainer, {{"seed", cmd->seed}, {"stage", "finetune"}});
      std::cout << json{{"seed", cmd->seed}, {"train_loss", pipeline::curve_json(curve)}}.dump(2)
                << '\n';
    };
  }

  // decode
  {
    auto& c = add_command(commands, root, "decode", "Beam-search summaries for documents", false);
    struct Opts {
      std::string ckpt, vocab, input, out;
      decoding::DecodeConfig decode;
      std::size_t workers = 1;
    };
    auto o = std::make_shared<Opts>();
    need(c, c.app->add_option("--ckpt", o->ckpt));
    need(c, c.app->add_option("--vocab", o->vocab));
    need(c, c.app->add_option("--input", o->input, "Documents JSONL {\"id\",\"text\"}"));
    c.app->add_option("--out", o->out, "Output JSONL (default stdout)");
    c.app->add_option("--workers", o->workers)->capture_default_str();
    add_decode_flags(c.app, o->decode);
    c.run = [=](const json&) {
      const auto trainer = model::load_checkpoint<float>(o->ckpt);
      const auto vocab = text::Vocabulary::load(o->vocab);
      const auto docs = text::read_corpus_jsonl(o->input);
      std::vector<text::TokenSeq> sources;
      for (const auto& d : docs) {
        sources.push_back(text::truncate(pipeline::tokenize_text(vocab, d.text), text::kMaxSourceLen));
      }
      const auto decoded = decoding::decode_corpus(trainer.params(), trainer.config(), vocab,
                                                   sources, o->decode, o->workers);
      std::vector<std::string> ids;
      for (const auto& d : docs) ids.push_back(d.id);
      Output out(o->out);
      pipeline::write_decodes_jsonl(out.stream(), ids, decoded);
    };
  }

  // rouge
  {
    auto& c = add_command(commands, root, "rouge", "Score candidate/reference pairs", false);
    struct Opts {
      std::string variant = "rl", protocol = "f1", pairs;
    };
    auto o = std::make_shared<Opts>();
    c.app->add_option("--variant", o->variant, "r1, r2 or rl")->capture_default_str();
    c.app->add_option("--protocol", o->protocol, "f1 or limited-recall")->capture_default_str();
    need(c, c.app->add_option("--pairs", o->pairs, "JSONL {\"candidate\",\"reference\"}"));
    c.run = [=](const json&) {
      std::ifstream in(o->pairs);
      if (!in) throw Error("cannot open " + o->pairs);
      std::vector<rouge::TextPair> pairs;
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
          const auto j = json::parse(line);
          pairs.push_back({j.at("candidate").get<std::string>(), j.at("reference").get<std::string>()});
        } catch (const json::exception& e) {
          throw MalformedRecord(line_no, e.what());
        }
      }
      const auto variant = rouge::parse_variant(o->variant);
      const auto protocol = rouge::parse_protocol(o->protocol);
      const auto s = rouge::score_corpus(pairs, variant, protocol);
      std::cout << json{{"variant", o->variant},     {"protocol", o->protocol},
                        {"precision", s.precision},  {"recall", s.recall},
                        {"f1", s.f1},                {"n_pairs", pairs.size()}}
                       .dump(2)
                << '\n';
    };
  }

  // analyze-reorder
  {
    auto& c = add_command(commands, root, "analyze-reorder", "Content-reordering statistic", false);
    auto pairs = std::make_shared<std::string>();
    auto align = std::make_shared<std::string>("rouge2");
    need(c, c.app->add_option("--pairs", *pairs, "JSONL {\"document\",\"summary\"}"));
    c.app->add_option("--align", *align, "rouge2 or bigram")->capture_default_str();
    c.run = [=](const json&) {
      if (*align != "rouge2" && *align != "bigram") throw InvalidArgument("--align: rouge2 or bigram");
      std::vector<analysis::DocSummary> items;
      for (const auto& p : pipeline::read_pairs_jsonl(*pairs)) items.push_back({p.document, p.summary});
      const auto r = analysis::corpus_reorder_stat(
          items, *align == "rouge2" ? analysis::AlignScore::kRouge2F1
                                    : analysis::AlignScore::kBigramOverlap);
      std::cout << json{{"n_pairs", r.n_pairs}, {"n_reordered", r.n_reordered}, {"fraction", r.fraction}}
                       .dump(2)
                << '\n';
    };
  }

  // lead3
  {
    auto& c = add_command(commands, root, "lead3", "First-three-sentences baseline", false);
    auto docs = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    need(c, c.app->add_option("--docs", *docs, "Documents JSONL {\"id\",\"text\"}"));
    c.app->add_option("--out", *out, "Output JSONL (default stdout)");
    c.run = [=](const json&) {
      Output o(*out);
      for (const auto& d : text::read_corpus_jsonl(*docs)) {
        o.stream() << json{{"id", d.id}, {"summary", analysis::lead3(text::segment_sentences(d.text))}}.dump()
                   << '\n';
      }
    };
  }

  // beam-sweep
  {
    auto& c = add_command(commands, root, "beam-sweep", "ROUGE-L for each beam size", false);
    struct Opts {
      std::string ckpt, vocab, pairs;
      std::vector<std::size_t> beams = decoding::default_sweep_beams();
      decoding::DecodeConfig decode;
      std::size_t workers = 1;
    };
    auto o = std::make_shared<Opts>();
    need(c, c.app->add_option("--ckpt", o->ckpt));
    need(c, c.app->add_option("--vocab", o->vocab));
    need(c, c.app->add_option("--pairs", o->pairs, "Validation pairs JSONL"));
    c.app->add_option("--beams", o->beams)->capture_default_str();
    c.app->add_option("--workers", o->workers)->capture_default_str();
    add_decode_flags(c.app, o->decode);
    c.run = [=](const json&) {
      const auto trainer = model::load_checkpoint<float>(o->ckpt);
      const auto vocab = text::Vocabulary::load(o->vocab);
      const auto rows = decoding::beam_sweep(trainer.params(), trainer.config(), vocab,
                                             eval_items(o->pairs, vocab), o->beams, o->decode,
                                             o->workers);
      std::cout << decoding::beam_table_json(rows).dump(2) << '\n';
    };
  }

  // tune-min-len
  {
    auto& c = add_command(commands, root, "tune-min-len", "Pick min_len by validation ROUGE-L", false);
    struct Opts {
      std::string ckpt, vocab, pairs;
      std::size_t lo = 30, hi = 80, step = 5, workers = 1;
      decoding::DecodeConfig decode;
    };
    auto o = std::make_shared<Opts>();
    need(c, c.app->add_option("--ckpt", o->ckpt));
    need(c, c.app->add_option("--vocab", o->vocab));
    need(c, c.app->add_option("--pairs", o->pairs, "Validation pairs JSONL"));
    c.app->add_option("--lo", o->lo)->capture_default_str();
    c.app->add_option("--hi", o->hi)->capture_default_str();
    c.app->add_option("--step", o->step)->capture_default_str();
    c.app->add_option("--workers", o->workers)->capture_default_str();
    add_decode_flags(c.app, o->decode);
    c.run = [=](const json&) {
      const auto trainer = model::load_checkpoint<float>(o->ckpt);
      const auto vocab = text::Vocabulary::load(o->vocab);
      const auto result = decoding::tune_min_length(trainer.params(), trainer.config(), vocab,
                                                    eval_items(o->pairs, vocab), o->lo, o->hi,
                                                    o->step, o->decode, o->workers);
      std::cout << decoding::min_len_table_json(result).dump(2) << '\n';
    };
  }

  // run-experiment
  {
    auto& c = add_command(commands, root, "run-experiment",
                          "Pre-train, fine-tune, decode and score from one config", true);
    auto output_dir = std::make_shared<std::string>();
    auto workers = std::make_shared<std::size_t>(0);
    c.app->add_option("--output-dir", *output_dir, "Overrides paths.output_dir");
    c.app->add_option("--workers", *workers, "Overrides workers");
    const auto* cmd = &c;
    c.run = [=](const json& cfg) {
      auto rc = cfg.get<pipeline::RunConfig>();
      rc.seed = cmd->seed;
      if (!output_dir->empty()) rc.paths.output_dir = *output_dir;
      if (*workers > 0) rc.workers = *workers;
      const auto manifest = pipeline::run_experiment(rc);
      std::cout << manifest.at("metrics").at("rouge").dump(2) << '\n';
    };
  }

  try {
    root.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return root.exit(e);
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      json cfg = json::object();
      if (!c.config_path.empty()) {
        cfg = read_json_file(c.config_path);
        if (!cfg.is_object()) throw FormatError("config must be a JSON object");
        merge_config(c.app, cfg);
      }
      if (c.seed_opt != nullptr) c.required.push_back(c.seed_opt);
      for (const auto* opt : c.required) {
        if (opt->count() == 0) throw InvalidArgument(opt->get_name() + " is required");
      }
      c.run(cfg);
    } catch (const std::exception& e) {
      std::cerr << c.app->get_name() << ": " << e.what() << '\n';
      return 1;
    }
  }
  return 0;
}

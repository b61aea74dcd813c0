#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hitskt/container.hpp"
#include "hitskt/export.hpp"
#include "hitskt/ingest.hpp"
#include "hitskt/model.hpp"
#include "hitskt/segmentation.hpp"
#include "hitskt/synthetic.hpp"
#include "hitskt/training.hpp"

#ifndef HITSKT_GIT_DESC
#define HITSKT_GIT_DESC "unknown"
#endif

using namespace hitskt;

namespace {

int64_t now_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

// Run metadata dropped next to the primary output. Not covered by the
// byte-exact idempotence of data outputs: it records wall-clock times.
struct Manifest {
    std::string command;
    std::string config;
    std::vector<std::string> inputs;
    std::string output;
    uint64_t seed = 0;
    int64_t started = 0;
};

void write_manifest(const Manifest& m) {
    if (m.output.empty()) return;
    std::ostringstream os;
    os << "command = " << m.command << "\n";
    if (!m.config.empty()) os << "config = " << m.config << "\n";
    for (const std::string& in : m.inputs) os << "input = " << in << "\n";
    os << "output = " << m.output << "\n";
    os << "seed = " << m.seed << "\n";
    os << "git = " << HITSKT_GIT_DESC << "\n";
    os << "started = " << m.started << "\n";
    os << "finished = " << now_seconds() << "\n";
    io::atomic_write(m.output + ".manifest", os.str());
}

void write_text(const std::string& path, const std::string& text) {
    io::atomic_write(path, text);
}

// Binds a checkpoint to the corpus it will run against, refusing silent
// shape mismatches.
Model model_from_checkpoint(const CheckpointData& ck,
                            const SegmentedDataset& sd, TrainConfig& tc_out) {
    tc_out = TrainConfig::from_keyvalues(KeyValues::from_string(ck.config_text));
    const ModelConfig& mc = tc_out.model;
    if (mc.question_count != sd.vocab.question_count() ||
        mc.skill_count != sd.vocab.skill_count() ||
        mc.l_ses != sd.lengths.l_ses || mc.l_int != sd.lengths.l_int)
        throw std::runtime_error(
            "checkpoint was trained on a different corpus shape");
    Model model(mc);
    apply_checkpoint(ck, model.params);
    return model;
}

std::string split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

int run_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_path, const std::string& log_path,
              const std::string& ablation, bool seed_set, uint64_t seed,
              const std::string& lr_grid) {
    Manifest man{"train", config_path, {data_path}, out_path, 0,
                 now_seconds()};

    TrainConfig base = TrainConfig::from_file(config_path);
    if (!ablation.empty()) base.model.ablation = ablation_from_string(ablation);
    if (seed_set) base.seed = seed;
    man.seed = base.seed;

    SegmentedDataset sd = read_segmented(data_path);
    std::vector<TrainItem> items = prepare_items(sd);

    std::ofstream log_file;
    if (!log_path.empty()) {
        log_file.open(log_path, std::ios::trunc);
        if (!log_file)
            throw std::runtime_error("cannot open log file: " + log_path);
    }
    LogFn log = [&](const std::string& line) {
        std::cout << line << "\n" << std::flush;
        if (log_file) log_file << line << "\n" << std::flush;
    };

    std::vector<double> lrs;
    if (lr_grid.empty()) {
        lrs.push_back(base.lr);
    } else {
        std::stringstream ss(lr_grid);
        std::string tok;
        while (std::getline(ss, tok, ',')) lrs.push_back(std::stod(tok));
        if (lrs.empty()) throw std::runtime_error("empty lr grid");
    }

    struct Best {
        double val = -1.0;
        std::string blob;  // serialized checkpoint
        double lr = 0.0;
    } best;

    char buf[160];
    for (double lr : lrs) {
        TrainConfig tc = bind_config(base, sd);
        tc.lr = lr;
        if (lrs.size() > 1) {
            std::snprintf(buf, sizeof(buf), "lr=%.17g", lr);
            log(buf);
        }
        Rng rng(tc.seed);
        Model model(tc.model);
        model.params.init(rng, tc.model.d);
        TrainResult res = train(model, items, tc, rng, log);

        int64_t epoch = res.best_epoch > 0
                            ? res.best_epoch
                            : static_cast<int64_t>(res.epochs.size());
        save_checkpoint(out_path, tc.canonical(), epoch, rng.save_state(),
                        model.params);
        double score = res.best_epoch > 0 ? res.best_val_auc : 0.0;
        std::snprintf(buf, sizeof(buf),
                      "done lr=%.17g epochs=%zu best_epoch=%lld "
                      "best_val_auc=%.17g early_stop=%d train_target=%d",
                      lr, res.epochs.size(),
                      static_cast<long long>(res.best_epoch), res.best_val_auc,
                      res.stopped_early ? 1 : 0, res.hit_train_target ? 1 : 0);
        log(buf);
        if (score > best.val) {
            std::ifstream in(out_path, std::ios::binary);
            std::ostringstream blob;
            blob << in.rdbuf();
            best.val = score;
            best.blob = blob.str();
            best.lr = lr;
        }
    }
    if (lrs.size() > 1) {
        io::atomic_write(out_path, best.blob);
        std::snprintf(buf, sizeof(buf), "grid_best lr=%.17g val_auc=%.17g",
                      best.lr, best.val);
        log(buf);
    }
    write_manifest(man);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical session-aware knowledge tracing pipeline"};
    app.require_subcommand(1);

    // ingest
    auto* c_ing = app.add_subcommand("ingest", "Parse a raw log into a "
                                               "record container");
    std::string ing_schema, ing_input, ing_output;
    c_ing->add_option("--schema", ing_schema, "Schema key=value file")
        ->required()
        ->check(CLI::ExistingFile);
    c_ing->add_option("--input", ing_input, "Raw delimited log")
        ->required()
        ->check(CLI::ExistingFile);
    c_ing->add_option("--output", ing_output, "Record container to write")
        ->required();

    // segment
    auto* c_seg = app.add_subcommand("segment", "Split records into sessions "
                                                "and fix sequence lengths");
    std::string seg_input, seg_output;
    double seg_gap = kDefaultSessionGapHours;
    int64_t seg_lses = 0, seg_lint = 0;
    c_seg->add_option("--input", seg_input, "Record container")
        ->required()
        ->check(CLI::ExistingFile);
    c_seg->add_option("--output", seg_output, "Segmented container to write")
        ->required();
    c_seg->add_option("--gap-hours", seg_gap,
                      "Idle threshold between sessions")
        ->capture_default_str();
    c_seg->add_option("--l-ses", seg_lses,
                      "Override the derived session-count length");
    c_seg->add_option("--l-int", seg_lint,
                      "Override the derived interactions-per-session length");

    // stats
    auto* c_sta = app.add_subcommand("stats", "Report corpus statistics");
    std::string sta_input, sta_output;
    c_sta->add_option("--input", sta_input, "Segmented container")
        ->required()
        ->check(CLI::ExistingFile);
    c_sta->add_option("--output", sta_output,
                      "Write the report here instead of stdout");

    // train
    auto* c_tra = app.add_subcommand("train", "Train a model");
    std::string tra_config, tra_data, tra_output, tra_log, tra_ablation,
        tra_grid;
    uint64_t tra_seed = 0;
    c_tra->add_option("--config", tra_config, "Training config file")
        ->required()
        ->check(CLI::ExistingFile);
    c_tra->add_option("--data", tra_data, "Segmented container")
        ->required()
        ->check(CLI::ExistingFile);
    c_tra->add_option("--output", tra_output, "Checkpoint to write")
        ->required();
    c_tra->add_option("--log", tra_log, "Also append metric lines here");
    c_tra->add_option("--ablation", tra_ablation, "Model variant")
        ->check(CLI::IsMember(
            {"none", "no-decay", "avg-pool", "no-ksr", "no-pos"}));
    auto* seed_opt =
        c_tra->add_option("--seed", tra_seed, "Override the config seed");
    c_tra->add_option("--lr-grid", tra_grid,
                      "Comma-separated learning rates; keeps the best by "
                      "validation AUC");

    // eval
    auto* c_eva = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string eva_ckpt, eva_data, eva_split = "test", eva_dump;
    c_eva->add_option("--checkpoint", eva_ckpt, "Checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    c_eva->add_option("--data", eva_data, "Segmented container")
        ->required()
        ->check(CLI::ExistingFile);
    c_eva->add_option("--split", eva_split, "Which sessions to score")
        ->check(CLI::IsMember({"train", "val", "test"}))
        ->capture_default_str();
    c_eva->add_option("--dump", eva_dump, "Write per-prediction rows here");

    // export-embeddings
    auto* c_emb = app.add_subcommand("export-embeddings",
                                     "Dump one embedding table as text");
    std::string emb_ckpt, emb_data, emb_table, emb_output;
    c_emb->add_option("--checkpoint", emb_ckpt, "Checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    c_emb->add_option("--data", emb_data, "Segmented container (for labels)")
        ->required()
        ->check(CLI::ExistingFile);
    c_emb->add_option("--table", emb_table, "Which table")
        ->required()
        ->check(CLI::IsMember({"skill", "difficulty", "occurrence", "answer"}));
    c_emb->add_option("--output", emb_output, "Text file to write")
        ->required();

    // export-state
    auto* c_sts = app.add_subcommand(
        "export-state", "Per-session per-skill predicted state of a student");
    std::string sts_ckpt, sts_data, sts_student, sts_weights = "uniform",
                sts_output;
    c_sts->add_option("--checkpoint", sts_ckpt, "Checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    c_sts->add_option("--data", sts_data, "Segmented container")
        ->required()
        ->check(CLI::ExistingFile);
    c_sts->add_option("--student", sts_student, "Source student id")
        ->required();
    c_sts->add_option("--weights", sts_weights, "Averaging weights")
        ->check(CLI::IsMember({"uniform", "count"}))
        ->capture_default_str();
    c_sts->add_option("--output", sts_output, "Text file to write")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*c_ing) {
            Manifest man{"ingest", ing_schema, {ing_input}, ing_output, 0,
                         now_seconds()};
            Schema schema = Schema::from_file(ing_schema);
            Dataset ds = ingest_file(ing_input, schema);
            write_dataset(ds, ing_output);
            std::cout << "records=" << ds.total_records()
                      << " students=" << ds.student_label.size()
                      << " questions=" << ds.vocab.question_count()
                      << " skills=" << ds.vocab.skill_count() << "\n";
            write_manifest(man);
        } else if (*c_seg) {
            Manifest man{"segment", "", {seg_input}, seg_output, 0,
                         now_seconds()};
            Dataset ds = read_dataset(seg_input);
            SegmentedDataset sd = segment_dataset(ds, seg_gap);
            if (seg_lses > 0) sd.lengths.l_ses = seg_lses;
            if (seg_lint > 0) sd.lengths.l_int = seg_lint;
            write_segmented(sd, seg_output);
            std::cout << "students=" << sd.histories.size()
                      << " l_ses=" << sd.lengths.l_ses
                      << " l_int=" << sd.lengths.l_int << "\n";
            write_manifest(man);
        } else if (*c_sta) {
            SegmentedDataset sd = read_segmented(sta_input);
            StatsReport rep =
                dataset_stats(sd.histories, sd.vocab, sd.ingest_counts);
            std::string text = format_stats(rep);
            if (sta_output.empty()) {
                std::cout << text;
            } else {
                Manifest man{"stats", "", {sta_input}, sta_output, 0,
                             now_seconds()};
                write_text(sta_output, text);
                write_manifest(man);
            }
        } else if (*c_tra) {
            return run_train(tra_config, tra_data, tra_output, tra_log,
                             tra_ablation, seed_opt->count() > 0, tra_seed,
                             tra_grid);
        } else if (*c_eva) {
            SegmentedDataset sd = read_segmented(eva_data);
            CheckpointData ck = read_checkpoint(eva_ckpt);
            TrainConfig tc;
            Model model = model_from_checkpoint(ck, sd, tc);
            std::vector<TrainItem> items = prepare_items(sd);
            Split split = eva_split == "train"  ? Split::train
                          : eva_split == "val" ? Split::val
                                               : Split::test;
            EvalResult res = evaluate(model, items, split);
            char buf[160];
            std::snprintf(buf, sizeof(buf), "split=%s n=%zu loss=%.17g",
                          split_name(split).c_str(), res.preds.size(),
                          res.loss);
            std::cout << buf;
            if (res.auc)
                std::snprintf(buf, sizeof(buf), " auc=%.17g", *res.auc);
            else
                std::snprintf(buf, sizeof(buf), " auc=nan");
            std::cout << buf << "\n";
            if (!eva_dump.empty()) {
                Manifest man{"eval", "", {eva_ckpt, eva_data}, eva_dump, 0,
                             now_seconds()};
                std::string out =
                    "student\tsession\tposition\tquestion\tskill\tlabel\tp\n";
                size_t at = 0;
                for (size_t i = 0; i < items.size(); ++i) {
                    size_t n = 0;
                    const StudentTensors& st = items[i].tensors;
                    for (long s = 0; s < st.l_ses; ++s) {
                        if (!st.ses_mask[s]) continue;
                        if (!predictable(items[i].split, split,
                                         st.original_session(s)))
                            continue;
                        for (long t = 0; t < st.l_int; ++t)
                            if (st.int_mask[st.idx(s, t)]) ++n;
                    }
                    for (size_t k = 0; k < n; ++k, ++at) {
                        const Prediction& p = res.preds.at(at);
                        std::snprintf(buf, sizeof(buf),
                                      "%lld\t%ld\t%lld\t%lld\t%d\t%.17g\n",
                                      static_cast<long long>(
                                          p.session_original),
                                      p.position,
                                      static_cast<long long>(p.question),
                                      static_cast<long long>(p.skill),
                                      p.label, p.p);
                        out += sd.histories[i].student_id;
                        out += '\t';
                        out += buf;
                    }
                }
                write_text(eva_dump, out);
                write_manifest(man);
            }
        } else if (*c_emb) {
            Manifest man{"export-embeddings", "", {emb_ckpt, emb_data},
                         emb_output, 0, now_seconds()};
            SegmentedDataset sd = read_segmented(emb_data);
            CheckpointData ck = read_checkpoint(emb_ckpt);
            TrainConfig tc;
            Model model = model_from_checkpoint(ck, sd, tc);
            write_text(emb_output,
                       format_embedding_table(model.params, sd.vocab,
                                              emb_table));
            write_manifest(man);
        } else if (*c_sts) {
            Manifest man{"export-state", "", {sts_ckpt, sts_data}, sts_output,
                         0, now_seconds()};
            SegmentedDataset sd = read_segmented(sts_data);
            CheckpointData ck = read_checkpoint(sts_ckpt);
            TrainConfig tc;
            Model model = model_from_checkpoint(ck, sd, tc);
            std::vector<StateRow> rows =
                export_state(model, sd, sts_student,
                             state_weights_from_string(sts_weights));
            write_text(sts_output, format_state_rows(sts_student, rows));
            write_manifest(man);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// Command-line pipeline: corpus generation, dataset building, training,
// meshing with iteration snapshots, and mesh evaluation. All subcommands are
// seeded; --threads 1 is the bit-exact reproducibility mode (higher counts
// only change scheduling, results stay identical for a fixed build).

#include "udfmesh/corpus.hpp"
#include "udfmesh/errors.hpp"
#include "udfmesh/mesher.hpp"
#include "udfmesh/metrics.hpp"
#include "udfmesh/refiner.hpp"
#include "udfmesh/rng.hpp"
#include "udfmesh/threads.hpp"
#include "udfmesh/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace udfmesh;

namespace {

// Fills options that were not passed on the command line from a JSON config
// file; flags win over the file.
struct ConfigFile {
    json cfg = json::object();

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config '" + path + "'");
        try {
            in >> cfg;
        } catch (const json::parse_error& e) {
            throw FormatError(path + ": " + e.what());
        }
    }

    template <typename T>
    void apply(const CLI::Option* opt, const char* key, T& value) const {
        if (opt != nullptr && opt->count() > 0) return;
        if (cfg.contains(key)) value = cfg.at(key).get<T>();
    }
};

int resolve_threads(int flag_value, bool flag_given) {
    if (flag_given) return flag_value;
    if (const char* env = std::getenv("UDFMESH_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return hardware_threads();
}

void log_config(const json& resolved, const std::string& out_path) {
    std::ofstream out(out_path);
    if (out) out << resolved.dump(2) << "\n";
    std::cerr << "config: " << resolved.dump() << "\n";
}

std::string strip_suffix(const std::string& path, const std::string& suffix) {
    if (path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return path.substr(0, path.size() - suffix.size());
    return path;
}

// --- gen-corpus ---------------------------------------------------------

int cmd_gen_corpus(const std::string& out, int count, std::uint64_t seed, const GenParams& params) {
    const json corpus = generate_corpus(count, seed, params);
    write_corpus(corpus, out);
    if (count == 0) std::cerr << "warning: empty corpus written\n";
    json resolved{{"command", "gen-corpus"}, {"out", out},       {"count", count},
                  {"seed", seed},            {"min_size", params.min_size}, {"max_size", params.max_size},
                  {"max_parts", params.max_parts}};
    log_config(resolved, out + ".config.json");
    std::cerr << "wrote " << count << " shapes to " << out << "\n";
    return 0;
}

// --- dataset ------------------------------------------------------------

int cmd_dataset(const std::string& corpus_path, const std::string& out, int res, double clamp,
                std::uint64_t seed, int threads) {
    const auto corpus = load_corpus(corpus_path);
    GridSpec spec;
    spec.resolution = res;
    const auto warn = [](const std::string& w) { std::cerr << "warning: " << w << "\n"; };
    const auto dataset = build_dataset(corpus, spec, clamp, seed, warn, threads);
    save_dataset(dataset, out);
    std::size_t cells = 0;
    for (const auto& s : dataset) cells += s.cell_count();
    json resolved{{"command", "dataset"}, {"corpus", corpus_path}, {"out", out},   {"res", res},
                  {"clamp", clamp},       {"seed", seed},          {"threads", threads}};
    log_config(resolved, out + ".config.json");
    std::cerr << "dataset: " << dataset.size() << " shapes, " << cells << " active cells\n";
    return 0;
}

// --- train --------------------------------------------------------------

int cmd_train(const std::string& corpus_path, const std::string& dataset_path, const std::string& out,
              const std::string& log_path, int res, TrainConfig config) {
    std::vector<ShapeGridSample> dataset;
    if (!dataset_path.empty()) {
        dataset = load_dataset(dataset_path);
    } else {
        const auto corpus = load_corpus(corpus_path);
        GridSpec spec;
        spec.resolution = res;
        const auto warn = [](const std::string& w) { std::cerr << "warning: " << w << "\n"; };
        dataset = build_dataset(corpus, spec, config.clamp, config.seed, warn, config.threads);
    }

    std::ofstream log(log_path);
    if (!log) throw IoError("cannot open '" + log_path + "' for writing");
    log << "epoch,shape,iters,loss\n";
    char row[160];
    int last_epoch = 0;
    double epoch_sum = 0.0;
    int epoch_steps = 0;
    const auto on_step = [&](const TrainStepLog& s) {
        std::snprintf(row, sizeof row, "%d,%s,%d,%.9g\n", s.epoch, s.shape.c_str(), s.iterations, s.loss);
        log << row;
        if (s.epoch != last_epoch && last_epoch != 0) {
            std::cerr << "epoch " << last_epoch << ": mean loss "
                      << (epoch_steps > 0 ? epoch_sum / epoch_steps : 0.0) << "\n";
            epoch_sum = 0.0;
            epoch_steps = 0;
        }
        last_epoch = s.epoch;
        epoch_sum += s.loss;
        ++epoch_steps;
    };

    const TrainResult result = train(config, dataset, on_step);
    if (last_epoch != 0)
        std::cerr << "epoch " << last_epoch << ": mean loss "
                  << (epoch_steps > 0 ? epoch_sum / epoch_steps : 0.0) << "\n";
    save_weights(result.model, out);

    json resolved{{"command", "train"},
                  {"corpus", corpus_path},
                  {"dataset", dataset_path},
                  {"out", out},
                  {"log", log_path},
                  {"res", res},
                  {"epochs", config.epochs},
                  {"lr", config.lr},
                  {"max_extra_iters", config.max_extra_iterations},
                  {"noise_sigma", config.noise_sigma},
                  {"clamp", config.clamp},
                  {"seed", config.seed},
                  {"threads", config.threads}};
    log_config(resolved, out + ".config.json");
    std::cerr << "weights written to " << out << "\n";
    return 0;
}

// --- mesh ---------------------------------------------------------------

void dump_categories(const std::string& path, const RefineResult& r, int res) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const char magic[4] = {'U', 'D', 'F', 'C'};
    out.write(magic, 4);
    const auto w32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    w32(1);
    w32(static_cast<std::uint32_t>(res));
    w32(static_cast<std::uint32_t>(r.cells.size()));
    std::vector<std::uint16_t> coords(r.cells.size() * 3);
    for (std::size_t c = 0; c < r.cells.size(); ++c) {
        coords[3 * c + 0] = static_cast<std::uint16_t>(r.cells[c].i);
        coords[3 * c + 1] = static_cast<std::uint16_t>(r.cells[c].j);
        coords[3 * c + 2] = static_cast<std::uint16_t>(r.cells[c].k);
    }
    out.write(reinterpret_cast<const char*>(coords.data()), static_cast<std::streamsize>(coords.size() * 2));
    w32(static_cast<std::uint32_t>(r.snapshots.size()));
    for (const auto& snap : r.snapshots)
        out.write(reinterpret_cast<const char*>(snap.data()), static_cast<std::streamsize>(snap.size()));
}

int cmd_mesh(const std::string& weights_path, const std::string& shape_path, const std::string& out,
             int res, RefineConfig config, bool oracle, bool snapshots, const std::string& categories_path) {
    const CorpusShape shape = load_shape(shape_path);
    GridSpec spec;
    spec.resolution = res;

    json resolved{{"command", "mesh"},   {"weights", weights_path},
                  {"shape", shape_path}, {"out", out},
                  {"res", res},          {"iters", config.iterations},
                  {"noise_sigma", config.noise_sigma}, {"clamp", config.clamp},
                  {"freeze", config.freeze_threshold}, {"freeze_enabled", config.freeze_enabled},
                  {"frozen_feed_zeros", config.frozen_feed_zeros}, {"oracle", oracle},
                  {"snapshots", snapshots}, {"seed", config.seed},
                  {"threads", config.threads}};

    if (oracle) {
        const TriangleMesh mesh = mesh_oracle(*shape.source, spec, config.threads);
        write_obj(mesh, out);
        log_config(resolved, out + ".config.json");
        std::cerr << "oracle mesh: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
                  << " triangles\n";
        return 0;
    }

    const MlpModel model = load_weights(weights_path);
    FieldPtr source = shape.source;
    if (config.noise_sigma > 0.0)
        source = make_corrupted(source, config.clamp, config.noise_sigma,
                                substream(config.seed, Stream::field_noise));
    const SampledGrid grid = sample_grid(*source, spec, config.threads);
    const RefineResult result = refine(model, grid, config);

    const std::string stem = strip_suffix(out, ".obj");
    TriangleMesh final_mesh;
    for (std::size_t it = 0; it < result.snapshots.size(); ++it) {
        if (!snapshots && it + 1 < result.snapshots.size()) continue;
        const auto cells = pseudo_sdf(grid, result.cells, result.snapshots[it]);
        TriangleMesh mesh = mesh_cells(spec, cells);
        if (snapshots) write_obj(mesh, stem + "_iter" + std::to_string(it + 1) + ".obj");
        if (it + 1 == result.snapshots.size()) final_mesh = std::move(mesh);
    }
    write_obj(final_mesh, out);
    if (!categories_path.empty()) dump_categories(categories_path, result, res);

    log_config(resolved, out + ".config.json");
    std::cerr << "active cells: " << result.cells.size() << ", forward passes: " << result.forward_passes
              << ", triangles: " << final_mesh.triangles.size() << "\n";
    return 0;
}

// --- eval ---------------------------------------------------------------

struct EvalRow {
    std::string shape;
    int iteration = -1;
    double chamfer_e5 = 0.0;
    MetricReport f1;
};

EvalRow eval_pair(const std::string& pred_path, const TriangleMesh& gt, std::size_t samples, double tau,
                  std::uint64_t seed, int threads) {
    const TriangleMesh pred = read_obj(pred_path);
    EvalRow row;
    row.shape = fs::path(pred_path).stem().string();
    const auto pos = row.shape.rfind("_iter");
    if (pos != std::string::npos) {
        const std::string tail = row.shape.substr(pos + 5);
        if (!tail.empty() && tail.find_first_not_of("0123456789") == std::string::npos) {
            row.iteration = std::atoi(tail.c_str());
            row.shape = row.shape.substr(0, pos);
        }
    }
    row.chamfer_e5 = chamfer_l2(pred, gt, samples, seed, threads) * 1e5;
    row.f1 = f1_score(pred, gt, tau, samples, seed, threads);
    return row;
}

void print_row(const std::string& shape, int iteration, double chamfer_e5, const MetricReport& f1,
               std::size_t samples, std::uint64_t seed) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%s,%.6g,%.6g,%.6g,%.6g,%zu,%llu\n", shape.c_str(),
                  iteration < 0 ? "" : std::to_string(iteration).c_str(), chamfer_e5, f1.f1, f1.precision,
                  f1.recall, samples, static_cast<unsigned long long>(seed));
    std::fputs(buf, stdout);
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, std::size_t samples, double tau,
             std::uint64_t seed, int threads) {
    const TriangleMesh gt = read_obj(gt_path);
    std::fputs("shape,iteration,chamfer_e5,f1,precision,recall,samples,seed\n", stdout);

    std::vector<std::string> files;
    if (fs::is_directory(pred_path)) {
        for (const auto& entry : fs::directory_iterator(pred_path))
            if (entry.path().extension() == ".obj") files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw Error("no .obj files in '" + pred_path + "'");
    } else {
        files.push_back(pred_path);
    }

    std::vector<EvalRow> rows;
    for (const auto& f : files) {
        rows.push_back(eval_pair(f, gt, samples, tau, seed, threads));
        const auto& r = rows.back();
        print_row(r.shape, r.iteration, r.chamfer_e5, r.f1, samples, seed);
    }

    if (rows.size() > 1) {
        std::vector<double> cd, f1s, prec, rec;
        for (const auto& r : rows) {
            cd.push_back(r.chamfer_e5);
            f1s.push_back(r.f1.f1);
            prec.push_back(r.f1.precision);
            rec.push_back(r.f1.recall);
        }
        MetricReport med;
        med.f1 = median_of(f1s);
        med.precision = median_of(prec);
        med.recall = median_of(rec);
        print_row("median", -1, median_of(cd), med, samples, seed);
        const auto mean = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return v.empty() ? 0.0 : s / static_cast<double>(v.size());
        };
        MetricReport mn;
        mn.f1 = mean(f1s);
        mn.precision = mean(prec);
        mn.recall = mean(rec);
        print_row("mean", -1, mean(cd), mn, samples, seed);
    }

    json resolved{{"command", "eval"}, {"pred", pred_path}, {"gt", gt_path},
                  {"samples", samples}, {"tau", tau},       {"seed", seed},
                  {"threads", threads}};
    std::cerr << "config: " << resolved.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"iterative pseudo-sign meshing of unsigned distance fields"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; explicit flags win");

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "generate a random analytic shape corpus");
    std::string gen_out;
    int gen_count = 80;
    std::uint64_t gen_seed = 0;
    GenParams gen_params;
    auto* gen_out_opt = gen->add_option("--out", gen_out, "output corpus JSON")->required();
    auto* gen_count_opt = gen->add_option("--count", gen_count, "number of shapes");
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "corpus seed");
    gen->add_option("--min-size", gen_params.min_size, "minimum primitive size");
    gen->add_option("--max-size", gen_params.max_size, "maximum primitive size");
    gen->add_option("--max-parts", gen_params.max_parts, "maximum union parts per shape");

    // dataset
    auto* ds = app.add_subcommand("dataset", "build a training dataset from a corpus");
    std::string ds_corpus, ds_out;
    int ds_res = 128;
    double ds_clamp = 0.1;
    std::uint64_t ds_seed = 0;
    int ds_threads = 0;
    bool ds_threads_given = false;
    ds->add_option("--corpus", ds_corpus, "corpus JSON")->required()->check(CLI::ExistingFile);
    ds->add_option("--out", ds_out, "output dataset file")->required();
    ds->add_option("--res", ds_res, "grid resolution");
    ds->add_option("--clamp", ds_clamp, "activity clamp threshold");
    ds->add_option("--seed", ds_seed, "dataset seed");
    ds->add_option("--threads", ds_threads, "worker threads (1 = reproducibility mode)")
        ->each([&](const std::string&) { ds_threads_given = true; });

    // train
    auto* tr = app.add_subcommand("train", "train the per-cell classifier");
    std::string tr_corpus, tr_dataset, tr_out, tr_log;
    int tr_res = 128;
    TrainConfig tr_config;
    int tr_threads = 0;
    bool tr_threads_given = false;
    auto* tr_corpus_opt = tr->add_option("--corpus", tr_corpus, "corpus JSON")->check(CLI::ExistingFile);
    tr->add_option("--dataset", tr_dataset, "prebuilt dataset file")->excludes(tr_corpus_opt)
        ->check(CLI::ExistingFile);
    auto* tr_out_opt = tr->add_option("--out", tr_out, "output weight file")->required();
    tr->add_option("--log", tr_log, "training log CSV (default <out>.log.csv)");
    auto* tr_res_opt = tr->add_option("--res", tr_res, "grid resolution for dataset building");
    auto* tr_epochs_opt = tr->add_option("--epochs", tr_config.epochs, "training epochs");
    auto* tr_lr_opt = tr->add_option("--lr", tr_config.lr, "Adam learning rate");
    auto* tr_iters_opt =
        tr->add_option("--max-extra-iters", tr_config.max_extra_iterations, "max extra unrolled iterations");
    auto* tr_sigma_opt = tr->add_option("--noise-sigma", tr_config.noise_sigma, "training noise sigma");
    auto* tr_clamp_opt = tr->add_option("--clamp", tr_config.clamp, "activity clamp threshold");
    auto* tr_seed_opt = tr->add_option("--seed", tr_config.seed, "run seed");
    tr->add_option("--threads", tr_threads, "worker threads (1 = reproducibility mode)")
        ->each([&](const std::string&) { tr_threads_given = true; });

    // mesh
    auto* ms = app.add_subcommand("mesh", "mesh a shape with the trained classifier");
    std::string ms_weights, ms_shape, ms_out, ms_categories;
    int ms_res = 128;
    RefineConfig ms_config;
    bool ms_no_freeze = false, ms_oracle = false, ms_snapshots = false;
    int ms_threads = 0;
    bool ms_threads_given = false;
    ms->add_option("--weights", ms_weights, "weight file")->check(CLI::ExistingFile);
    ms->add_option("--shape", ms_shape, "shape JSON")->required()->check(CLI::ExistingFile);
    ms->add_option("--out", ms_out, "output OBJ")->required();
    ms->add_option("--res", ms_res, "grid resolution");
    ms->add_option("--iters", ms_config.iterations, "refinement iterations");
    ms->add_option("--noise-sigma", ms_config.noise_sigma, "inference corruption sigma");
    ms->add_option("--clamp", ms_config.clamp, "activity clamp threshold");
    ms->add_option("--freeze", ms_config.freeze_threshold, "confidence freeze threshold");
    ms->add_flag("--no-freeze", ms_no_freeze, "disable confidence freezing");
    ms->add_flag("--frozen-feed-zeros", ms_config.frozen_feed_zeros,
                 "frozen cells feed zeros instead of their last beliefs");
    ms->add_flag("--snapshots", ms_snapshots, "write per-iteration meshes <out>_iter{i}.obj");
    ms->add_flag("--oracle", ms_oracle, "bypass the network and mesh true signs");
    ms->add_option("--dump-categories", ms_categories, "write per-iteration category arrays");
    ms->add_option("--seed", ms_config.seed, "run seed");
    ms->add_option("--threads", ms_threads, "worker threads (1 = reproducibility mode)")
        ->each([&](const std::string&) { ms_threads_given = true; });

    // eval
    auto* ev = app.add_subcommand("eval", "compare meshes: chamfer and F1");
    std::string ev_pred, ev_gt;
    std::size_t ev_samples = 200000;
    double ev_tau = 0.003;
    std::uint64_t ev_seed = 0;
    int ev_threads = 0;
    bool ev_threads_given = false;
    ev->add_option("--pred", ev_pred, "predicted OBJ or a directory of OBJs")
        ->required()
        ->check(CLI::ExistingPath);
    ev->add_option("--gt", ev_gt, "ground-truth OBJ")->required()->check(CLI::ExistingFile);
    ev->add_option("--samples", ev_samples, "surface samples per direction");
    ev->add_option("--tau", ev_tau, "F1 distance threshold");
    ev->add_option("--seed", ev_seed, "sampling seed");
    ev->add_option("--threads", ev_threads, "worker threads")
        ->each([&](const std::string&) { ev_threads_given = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ConfigFile cfg;
        if (!config_path.empty()) cfg.load(config_path);

        if (gen->parsed()) {
            cfg.apply(gen_out_opt, "out", gen_out);
            cfg.apply(gen_count_opt, "count", gen_count);
            cfg.apply(gen_seed_opt, "seed", gen_seed);
            return cmd_gen_corpus(gen_out, gen_count, gen_seed, gen_params);
        }
        if (ds->parsed()) {
            const int threads = resolve_threads(ds_threads, ds_threads_given);
            set_default_threads(threads);
            return cmd_dataset(ds_corpus, ds_out, ds_res, ds_clamp, ds_seed, threads);
        }
        if (tr->parsed()) {
            cfg.apply(tr_res_opt, "res", tr_res);
            cfg.apply(tr_epochs_opt, "epochs", tr_config.epochs);
            cfg.apply(tr_lr_opt, "lr", tr_config.lr);
            cfg.apply(tr_iters_opt, "max_extra_iters", tr_config.max_extra_iterations);
            cfg.apply(tr_sigma_opt, "noise_sigma", tr_config.noise_sigma);
            cfg.apply(tr_clamp_opt, "clamp", tr_config.clamp);
            cfg.apply(tr_seed_opt, "seed", tr_config.seed);
            if (tr_corpus.empty() && tr_dataset.empty())
                throw CLI::RequiredError("--corpus or --dataset");
            tr_config.threads = resolve_threads(tr_threads, tr_threads_given);
            set_default_threads(tr_config.threads);
            if (tr_log.empty()) tr_log = strip_suffix(tr_out, ".udfm") + ".log.csv";
            (void)tr_out_opt;
            return cmd_train(tr_corpus, tr_dataset, tr_out, tr_log, tr_res, tr_config);
        }
        if (ms->parsed()) {
            ms_config.freeze_enabled = !ms_no_freeze;
            ms_config.threads = resolve_threads(ms_threads, ms_threads_given);
            set_default_threads(ms_config.threads);
            if (!ms_oracle && ms_weights.empty()) throw CLI::RequiredError("--weights");
            return cmd_mesh(ms_weights, ms_shape, ms_out, ms_res, ms_config, ms_oracle, ms_snapshots,
                            ms_categories);
        }
        if (ev->parsed()) {
            const int threads = resolve_threads(ev_threads, ev_threads_given);
            set_default_threads(threads);
            return cmd_eval(ev_pred, ev_gt, ev_samples, ev_tau, ev_seed, threads);
        }
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

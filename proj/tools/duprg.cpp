// duprg: domain-unified prompt representations from precomputed embeddings.
//
//   duprg bank   --preset combined --classes classes.txt --out prompts.txt
//   duprg train  --prompts p.dupr --out model.dupc
//   duprg unify  --mode mp|cae [--model model.dupc] --prompts p.dupr --out reps.dupr
//   duprg eval   --reps reps.dupr --images a.dupr b.dupr [--out result.json]
//   duprg sweep  --prompts p.dupr --images a.dupr --lambda1 0 0.5 1 --lambda2 0 0.5 1 --out grid.csv
//   duprg synth  --out-dir synth/
//
// Exit codes: 0 success, 2 usage, 3 validation, 4 numeric abort.

#include "duprg/aggregate.hpp"
#include "duprg/atomic_file.hpp"
#include "duprg/cae.hpp"
#include "duprg/classify.hpp"
#include "duprg/domain_bank.hpp"
#include "duprg/embedding_io.hpp"
#include "duprg/errors.hpp"
#include "duprg/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>

namespace fs = std::filesystem;
using namespace duprg;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumeric = 4;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> read_class_list(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> classes;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        classes.push_back(line.substr(first, last - first + 1));
    }
    if (classes.empty()) {
        throw ValidationError("class file '" + path.string() + "' lists no classes");
    }
    return classes;
}

std::string column_name(const ImageSet& s, const fs::path& path) {
    return s.domain_tag.value_or(path.stem().string());
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string fmt_double(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

// Training flags shared by `train` and `sweep`; applied over config file values.
struct TrainFlags {
    std::string config_path;
    double lambda1 = 0, lambda2 = 0, lr = 0, weight_decay = 0;
    std::size_t epochs = 0, hidden = 0, latent = 0;
    std::uint64_t seed = 0;
    std::string recon_loss;
    CLI::Option *o_lambda1 = nullptr, *o_lambda2 = nullptr, *o_lr = nullptr, *o_wd = nullptr, *o_epochs = nullptr,
                *o_hidden = nullptr, *o_latent = nullptr, *o_seed = nullptr, *o_recon = nullptr;

    void attach(CLI::App* app, bool with_lambdas) {
        app->add_option("--config", config_path, "JSON config file (flags take precedence)");
        if (with_lambdas) {
            o_lambda1 = app->add_option("--lambda1", lambda1, "Weight of the intra-class loss (default 1.0)");
            o_lambda2 = app->add_option("--lambda2", lambda2, "Weight of the inter-class loss (default 1.0)");
        }
        o_lr = app->add_option("--lr", lr, "AdamW learning rate (default 0.04)");
        o_epochs = app->add_option("--epochs", epochs, "Full-batch epochs (default 1000)");
        o_seed = app->add_option("--seed", seed, "Initialization seed (default 0)");
        o_recon = app->add_option("--recon-loss", recon_loss, "cosine or l2 (default cosine)");
        o_hidden = app->add_option("--hidden", hidden, "Hidden width (default: input dimension)");
        o_latent = app->add_option("--latent", latent, "Latent width (default: half the input dimension)");
        o_wd = app->add_option("--weight-decay", weight_decay, "AdamW weight decay (default 0.01)");
    }

    CaeConfig resolve() const {
        CaeConfig cfg;
        if (!config_path.empty()) {
            cfg = config_from_json(read_file(config_path), cfg);
        }
        if (o_lambda1 && o_lambda1->count()) cfg.lambda1 = lambda1;
        if (o_lambda2 && o_lambda2->count()) cfg.lambda2 = lambda2;
        if (o_lr->count()) cfg.lr = lr;
        if (o_epochs->count()) cfg.epochs = epochs;
        if (o_seed->count()) cfg.seed = seed;
        if (o_recon->count()) cfg.recon_loss = recon_loss_from_string(recon_loss);
        if (o_hidden->count()) cfg.hidden = hidden;
        if (o_latent->count()) cfg.latent = latent;
        if (o_wd->count()) cfg.weight_decay = weight_decay;
        validate(cfg);
        return cfg;
    }
};

// ---- bank -------------------------------------------------------------------

struct BankArgs {
    std::string preset_name;
    std::string bank_path;
    std::string classes_path;
    std::string out;
    std::string sidecar;
    std::string save_bank_path;
};

int cmd_bank(const BankArgs& a) {
    if (a.preset_name.empty() == a.bank_path.empty()) {
        throw UsageError("bank: give exactly one of --preset or --bank");
    }
    const DomainBank bank = a.bank_path.empty() ? preset(a.preset_name) : load_bank(a.bank_path);
    const auto classes = read_class_list(a.classes_path);
    const auto prompts = expand(bank, classes);

    std::string text;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& p : prompts) {
        text += p.text;
        text += '\n';
        entries.push_back({p.domain_index, p.class_index});
    }
    const nlohmann::json sidecar = {
        {"bank", bank.name},
        {"domains", bank.domains.empty() ? std::vector<std::string>{"standard"} : bank.domains},
        {"classes", classes},
        {"template", bank.domains.empty() ? bank.template_standard : bank.template_domain},
        {"entries", entries}};
    const fs::path sidecar_path = a.sidecar.empty() ? fs::path(a.out + ".index.json") : fs::path(a.sidecar);

    write_file_atomic(a.out, text);
    write_file_atomic(sidecar_path, sidecar.dump(2) + "\n");
    if (!a.save_bank_path.empty()) {
        save_bank(bank, a.save_bank_path);
    }
    std::cout << "wrote " << prompts.size() << " prompts (" << std::max<std::size_t>(bank.domains.size(), 1)
              << " domains x " << classes.size() << " classes) to " << a.out << "\n";
    return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
    std::string prompts;
    std::string out;
    std::string report;
    bool quiet = false;
    TrainFlags flags;
};

int cmd_train(const TrainArgs& a) {
    const CaeConfig cfg = a.flags.resolve();
    const PromptTensor t = read_prompts(a.prompts);
    const std::size_t log_every = std::max<std::size_t>(1, cfg.epochs / 10);
    const auto result = train(t, cfg, [&](std::size_t epoch, const LossBreakdown& l) {
        if (!a.quiet && epoch % log_every == 0) {
            std::fprintf(stderr, "epoch %5zu  L_all %+.6f  L_rec %+.6f  L_intra %+.6f  L_inter %+.6f\n", epoch, l.all,
                         l.rec, l.intra, l.inter);
        }
    });
    const std::string checkpoint = encode_checkpoint(result.model);
    const std::string csv = result.report.to_csv();
    write_file_atomic(a.out, checkpoint);
    write_file_atomic(a.report.empty() ? a.out + ".report.csv" : a.report, csv);

    const auto& f = result.report.final_losses;
    std::printf("trained %zu epochs (d=%zu, hidden=%zu, latent=%zu, seed=%llu)\n", cfg.epochs, result.model.dims,
                result.model.hidden, result.model.latent, static_cast<unsigned long long>(cfg.seed));
    std::printf("final L_all %.6f  L_rec %.6f  L_intra %.6f  L_inter %.6f\n", f.all, f.rec, f.intra, f.inter);
    return 0;
}

// ---- unify ------------------------------------------------------------------

struct UnifyArgs {
    std::string mode;
    std::string model;
    std::string prompts;
    std::string out;
};

int cmd_unify(const UnifyArgs& a) {
    if (a.mode == "cae" && a.model.empty()) {
        throw UsageError("unify: --mode cae requires --model");
    }
    const PromptTensor t = read_prompts(a.prompts);
    const UnifiedReps reps = a.mode == "mp" ? mean_pool(t) : cae_unify(t, read_checkpoint(a.model));
    write_reps(reps, a.out);
    std::printf("wrote %zu unified representations (%s) to %s\n", reps.class_names.size(), a.mode.c_str(),
                a.out.c_str());
    return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string reps;
    std::vector<std::string> images;
    std::string out;
};

int cmd_eval(const EvalArgs& a) {
    const UnifiedReps reps = read_reps(a.reps);
    std::vector<std::string> columns;
    std::vector<double> accuracies;
    nlohmann::json results = nlohmann::json::array();
    for (const auto& path : a.images) {
        const ImageSet images = read_images(path);
        const EvalResult r = evaluate(reps, images);
        columns.push_back(column_name(images, path));
        accuracies.push_back(r.accuracy);
        auto j = nlohmann::json::parse(r.to_json());
        j["file"] = path;
        j["column"] = columns.back();
        results.push_back(std::move(j));
    }
    std::cout << format_accuracy_table(columns, accuracies);
    if (!a.out.empty()) {
        const nlohmann::json doc = {{"reps", a.reps}, {"results", results}, {"mean_accuracy", mean_of(accuracies)}};
        write_file_atomic(a.out, doc.dump(2) + "\n");
    }
    return 0;
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
    std::string prompts;
    std::vector<std::string> images;
    std::vector<double> grid1;
    std::vector<double> grid2;
    std::string out;
    TrainFlags flags;
};

int cmd_sweep(const SweepArgs& a) {
    const CaeConfig base = a.flags.resolve();
    const PromptTensor t = read_prompts(a.prompts);
    std::vector<ImageSet> sets;
    std::vector<std::string> columns;
    for (const auto& p : a.images) {
        sets.push_back(read_images(p));
        columns.push_back(column_name(sets.back(), p));
    }
    for (double l : a.grid1) {
        CaeConfig probe = base;
        probe.lambda1 = l;
        validate(probe);
    }
    for (double l : a.grid2) {
        CaeConfig probe = base;
        probe.lambda2 = l;
        validate(probe);
    }

    auto accuracies_for = [&](const UnifiedReps& reps) {
        std::vector<double> acc;
        for (const auto& s : sets) acc.push_back(evaluate(reps, s).accuracy);
        return acc;
    };

    std::string csv = "lambda1,lambda2";
    for (const auto& c : columns) csv += ",accuracy_" + c;
    csv += ",mean\n";

    std::cout << "mean pooling (no training):\n" << format_accuracy_table(columns, accuracies_for(mean_pool(t)));

    for (double l1 : a.grid1) {
        for (double l2 : a.grid2) {
            CaeConfig cfg = base;
            cfg.lambda1 = l1;
            cfg.lambda2 = l2;
            const auto model = train(t, cfg).model;
            const auto acc = accuracies_for(cae_unify(t, model));
            csv += fmt_double(l1) + "," + fmt_double(l2);
            for (double v : acc) csv += "," + fmt_double(v);
            csv += "," + fmt_double(mean_of(acc)) + "\n";
            std::cout << "lambda1=" << l1 << " lambda2=" << l2;
            if (l1 == 0.0 && l2 == 0.0) {
                std::cout << " (reconstruction-only CAE, not mean pooling)";
            }
            std::cout << ":\n" << format_accuracy_table(columns, acc);
        }
    }
    write_file_atomic(a.out, csv);
    return 0;
}

// ---- synth ------------------------------------------------------------------

struct SynthArgs {
    SynthSpec spec;
    std::string out_dir;
};

int cmd_synth(const SynthArgs& a) {
    const SynthData data = generate(a.spec);
    // Encode everything first so a validation failure leaves no files behind.
    const std::string prompts = encode_prompts(data.prompts);
    const std::string images = encode_images(data.images);
    const std::string oracle = encode_reps(data.oracle);

    const fs::path dir(a.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    }
    write_file_atomic(dir / "prompts.dupr", prompts);
    write_file_atomic(dir / "images.dupr", images);
    write_file_atomic(dir / "oracle_reps.dupr", oracle);
    std::printf("wrote %s/{prompts,images,oracle_reps}.dupr (M=%zu, C=%zu, d=%zu, N=%zu)\n", dir.string().c_str(),
                data.prompts.domains(), data.prompts.classes(), data.prompts.dims, data.images.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain-unified prompt representations for source-free domain generalization"};
    app.require_subcommand(1);

    BankArgs bank_args;
    auto* bank = app.add_subcommand("bank", "Expand a domain bank into prompt text for the exporter");
    bank->add_option("--preset", bank_args.preset_name, "empty | task:<dataset> | combined | expanded");
    bank->add_option("--bank", bank_args.bank_path, "Bank JSON file");
    bank->add_option("--classes", bank_args.classes_path, "Class names, one per line")->required();
    bank->add_option("--out", bank_args.out, "Prompt text output, one prompt per line")->required();
    bank->add_option("--sidecar", bank_args.sidecar, "Line index JSON (default: <out>.index.json)");
    bank->add_option("--save-bank", bank_args.save_bank_path, "Also write the resolved bank as JSON");
    bank->add_subcommand("expand", "Same as `bank`")->fallthrough();
    bank->require_subcommand(0, 1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train the cosine autoencoder on a prompt tensor");
    train_cmd->add_option("--prompts", train_args.prompts, "Prompt tensor (.dupr, kind 0)")->required();
    train_cmd->add_option("--out", train_args.out, "Checkpoint output (.dupc)")->required();
    train_cmd->add_option("--report", train_args.report, "Per-epoch loss CSV (default: <out>.report.csv)");
    train_cmd->add_flag("--quiet", train_args.quiet, "No per-epoch progress on stderr");
    train_args.flags.attach(train_cmd, true);

    UnifyArgs unify_args;
    auto* unify = app.add_subcommand("unify", "Produce one representation per class");
    unify->add_option("--mode", unify_args.mode, "mp (mean pooling) or cae")
        ->required()
        ->check(CLI::IsMember({"mp", "cae"}));
    unify->add_option("--model", unify_args.model, "Checkpoint for --mode cae");
    unify->add_option("--prompts", unify_args.prompts, "Prompt tensor (.dupr, kind 0)")->required();
    unify->add_option("--out", unify_args.out, "Unified reps output (.dupr, kind 2)")->required();

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Zero-shot accuracy on one or more image sets");
    eval->add_option("--reps", eval_args.reps, "Unified reps (.dupr, kind 2)")->required();
    eval->add_option("--images", eval_args.images, "Image sets (.dupr, kind 1)")->required()->expected(1, -1);
    eval->add_option("--out", eval_args.out, "JSON result file");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Grid over (lambda1, lambda2): train, unify, evaluate");
    sweep->add_option("--prompts", sweep_args.prompts, "Prompt tensor")->required();
    sweep->add_option("--images", sweep_args.images, "Image sets")->required()->expected(1, -1);
    sweep->add_option("--lambda1", sweep_args.grid1, "lambda1 grid values")->required()->expected(1, -1);
    sweep->add_option("--lambda2", sweep_args.grid2, "lambda2 grid values")->required()->expected(1, -1);
    sweep->add_option("--out", sweep_args.out, "CSV output")->required();
    sweep_args.flags.attach(sweep, false);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Write a synthetic benchmark as DUPR files");
    synth->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
    synth->add_option("--classes", synth_args.spec.classes, "Number of classes")->capture_default_str();
    synth->add_option("--domains", synth_args.spec.domains, "Prompt domains")->capture_default_str();
    synth->add_option("--dims", synth_args.spec.dims, "Embedding dimension")->capture_default_str();
    synth->add_option("--n-per-class", synth_args.spec.n_per_class, "Images per class per held-out domain")
        ->capture_default_str();
    synth->add_option("--heldout-domains", synth_args.spec.heldout_domains, "Image domains unseen in prompts")
        ->capture_default_str();
    synth->add_option("--class-sep", synth_args.spec.class_sep, "Class anchor separation")->capture_default_str();
    synth->add_option("--domain-shift", synth_args.spec.domain_shift, "Domain offset length")->capture_default_str();
    synth->add_option("--noise", synth_args.spec.noise, "Image noise magnitude")->capture_default_str();
    synth->add_option("--seed", synth_args.spec.seed, "Generator seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*bank) return cmd_bank(bank_args);
        if (*train_cmd) return cmd_train(train_args);
        if (*unify) return cmd_unify(unify_args);
        if (*eval) return cmd_eval(eval_args);
        if (*sweep) return cmd_sweep(sweep_args);
        if (*synth) return cmd_synth(synth_args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitUsage;
}

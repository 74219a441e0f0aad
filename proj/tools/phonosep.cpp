// Command-line front end for the separation pipeline: corpus generation, stem
// construction, dataset splitting, training, separation, evaluation,
// parameter auditing and gradient checking.

#include "phonosep/dataset.hpp"
#include "phonosep/evaluation.hpp"
#include "phonosep/pipeline.hpp"
#include "phonosep/training.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phonosep;

namespace {

// Flat key-value run configuration; flags override file values and unknown
// keys fail fast.
struct RunConfig {
    unsigned seed = 0;
    int jobs = 1;
    std::string out = ".";
    std::string variant = "unet";
    std::string model, mixture, annotations, baseline, lexicon;
    std::string manifest, manifest_train, manifest_val;
    double mask_override = -1.0;  // unset when negative

    // model geometry (desk-scale runs shrink these)
    int depth = 6, base_channels = 16, input_bins = 512;

    SynthConfig synth;
    TrainConfig train;
};

void apply_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j = json::parse(in);
    for (auto& [key, value] : j.items()) {
        if (key == "seed") rc.seed = value.get<unsigned>();
        else if (key == "jobs") rc.jobs = value.get<int>();
        else if (key == "out") rc.out = value.get<std::string>();
        else if (key == "variant") rc.variant = value.get<std::string>();
        else if (key == "model") rc.model = value.get<std::string>();
        else if (key == "mixture") rc.mixture = value.get<std::string>();
        else if (key == "annotations") rc.annotations = value.get<std::string>();
        else if (key == "baseline") rc.baseline = value.get<std::string>();
        else if (key == "lexicon") rc.lexicon = value.get<std::string>();
        else if (key == "manifest") rc.manifest = value.get<std::string>();
        else if (key == "manifest_train") rc.manifest_train = value.get<std::string>();
        else if (key == "manifest_val") rc.manifest_val = value.get<std::string>();
        else if (key == "mask_override") rc.mask_override = value.get<double>();
        else if (key == "depth") rc.depth = value.get<int>();
        else if (key == "base_channels") rc.base_channels = value.get<int>();
        else if (key == "input_bins") rc.input_bins = value.get<int>();
        else if (key == "synth_train") rc.synth.n_train = value.get<int>();
        else if (key == "synth_val") rc.synth.n_val = value.get<int>();
        else if (key == "synth_test") rc.synth.n_test = value.get<int>();
        else if (key == "synth_duration_s") rc.synth.duration_s = value.get<double>();
        else if (key == "batch_size") rc.train.batch_size = value.get<int>();
        else if (key == "batches_per_epoch") rc.train.batches_per_epoch = value.get<int>();
        else if (key == "lr") rc.train.lr = value.get<double>();
        else if (key == "plateau_patience") rc.train.plateau_patience = value.get<int>();
        else if (key == "early_stop_patience") rc.train.early_stop_patience = value.get<int>();
        else if (key == "min_delta") rc.train.min_delta = value.get<double>();
        else if (key == "augment_every") rc.train.augment_every = value.get<int>();
        else if (key == "val_batches") rc.train.val_batches = value.get<int>();
        else if (key == "max_epochs") rc.train.max_epochs = value.get<int>();
        else throw std::runtime_error("unknown config key: " + key);
    }
}

Lexicon load_lexicon_or_default(const RunConfig& rc) {
    if (!rc.lexicon.empty()) return Lexicon::load(rc.lexicon);
    // single-phoneme fallback so synthetic annotations always resolve
    Lexicon lex;
    for (int p = 0; p < PhonemeVocabulary::kNumPhonemes; ++p)
        lex.add(PhonemeVocabulary::symbols()[(size_t)p], {PhonemeVocabulary::symbols()[(size_t)p]});
    return lex;
}

UNetConfig model_config(const RunConfig& rc) {
    UNetConfig cfg;
    cfg.depth = rc.depth;
    cfg.base_channels = rc.base_channels;
    cfg.input_bins = rc.input_bins;
    cfg.input_frames = stft_params::kPatchFrames;
    return cfg;
}

int cmd_synth_data(RunConfig& rc) {
    SynthConfig cfg = rc.synth;
    cfg.seed = rc.seed;
    cfg.jobs = rc.jobs;
    Manifest m = synth_generate(rc.out, cfg);
    std::cout << "wrote " << m.size() << " songs under " << rc.out << "\n";
    return 0;
}

int cmd_build_sources(RunConfig& rc, const std::string& profiles_path,
                      const std::vector<std::string>& track_paths) {
    auto profiles = load_voice_profiles(profiles_path);
    std::vector<AudioClip> tracks;
    std::vector<double> probs;
    for (const auto& path : track_paths) {
        std::string id = fs::path(path).stem().string();
        auto it = std::find_if(profiles.begin(), profiles.end(),
                               [&](const TrackVoiceProfile& p) { return p.track_id == id; });
        if (it == profiles.end())
            throw std::runtime_error("no voice profile for track: " + id);
        tracks.push_back(load_wav(path));
        probs.push_back(it->prob);
    }
    SourceSet src = build_sources(tracks, probs);
    fs::create_directories(rc.out);
    save_wav(rc.out + "/vocals.wav", src.vocals, 32);
    save_wav(rc.out + "/accompaniment.wav", src.accompaniment, 32);
    save_wav(rc.out + "/mixture.wav", src.mixture, 32);
    std::cout << "wrote stems under " << rc.out << "\n";
    return 0;
}

int cmd_split(RunConfig& rc) {
    Manifest m = load_manifest(rc.manifest);
    SplitResult sr = split_by_agreement(m);
    fs::create_directories(rc.out);
    save_manifest(rc.out + "/train.txt", sr.train);
    save_manifest(rc.out + "/val.txt", sr.val);
    save_manifest(rc.out + "/test.txt", sr.test);
    std::cout << "train " << sr.train.size() << " val " << sr.val.size() << " test "
              << sr.test.size() << " excluded " << sr.excluded << "\n";
    return 0;
}

int cmd_train(RunConfig& rc) {
    Lexicon lex = load_lexicon_or_default(rc);
    Manifest train_m = load_manifest(rc.manifest_train);
    Manifest val_m = load_manifest(rc.manifest_val);
    validate_manifest(train_m);
    validate_manifest(val_m);

    UNetConfig ucfg = model_config(rc);
    TrainConfig tcfg = rc.train;
    tcfg.seed = rc.seed;

    TrainDataset train_data = load_songs(train_m, lex, ucfg.input_bins);
    TrainDataset val_data = load_songs(val_m, lex, ucfg.input_bins);

    TrainResult result;
    if (!rc.model.empty()) {
        LoadedModel lm = load_model(rc.model);
        result = train(lm.model, train_data, val_data, tcfg, rc.out, lm.optimizer.get(),
                       lm.meta.epoch);
    } else {
        UNet<float> model(ucfg, config_for_variant(rc.variant), rc.seed);
        result = train(model, train_data, val_data, tcfg, rc.out);
    }
    if (result.aborted_nan) {
        std::cerr << "training aborted on non-finite loss\n";
        return 2;
    }
    std::cout << "best val loss " << result.best_val_loss << " at epoch " << result.best_epoch
              << "; checkpoints under " << rc.out << "\n";
    return 0;
}

int cmd_separate(RunConfig& rc) {
    Lexicon lex = load_lexicon_or_default(rc);
    AudioClip mixture = load_wav(rc.mixture);

    AnnotationSequence ann;
    bool have_ann = !rc.annotations.empty();
    if (have_ann) ann = load_annotations(rc.annotations);

    SeparationOptions opts;
    LoadedModel lm;
    UNet<float>* model_ptr = nullptr;
    if (rc.mask_override >= 0.0) {
        opts.mask_override = (float)rc.mask_override;
    } else {
        if (rc.model.empty()) throw std::runtime_error("separate: --model or --mask-override required");
        lm = load_model(rc.model);
        model_ptr = &lm.model;
    }
    SeparationResult res =
        separate(mixture, have_ann ? &ann : nullptr, lex, model_ptr, opts);
    fs::create_directories(rc.out);
    save_wav(rc.out + "/vocals.wav", res.vocals, 32);
    save_wav(rc.out + "/accompaniment.wav", res.accompaniment, 32);
    std::cout << "wrote estimates under " << rc.out << "\n";
    return 0;
}

int cmd_evaluate(RunConfig& rc) {
    Lexicon lex = load_lexicon_or_default(rc);
    Manifest m = load_manifest(rc.manifest);
    validate_manifest(m);

    LoadedModel lm;
    UNet<float>* model_ptr = nullptr;
    SeparationOptions opts;
    if (rc.mask_override >= 0.0)
        opts.mask_override = (float)rc.mask_override;
    else {
        if (rc.model.empty()) throw std::runtime_error("evaluate: --model or --mask-override required");
        lm = load_model(rc.model);
        model_ptr = &lm.model;
    }

    std::vector<TrackEval> tracks(m.size());
#pragma omp parallel for schedule(dynamic) num_threads(rc.jobs)
    for (std::int64_t i = 0; i < (std::int64_t)m.size(); ++i) {
        const SongEntry& e = m[(size_t)i];
        AudioClip mixture = load_wav(e.mixture);
        AnnotationSequence ann = load_annotations(e.annotations);

        UNet<float>* song_model = model_ptr;
        std::unique_ptr<LoadedModel> local;
        if (model_ptr && rc.jobs > 1) {
            // per-thread model copy: forward mutates batch-norm scratch
            local = std::make_unique<LoadedModel>(load_model(rc.model));
            song_model = &local->model;
        }
        SeparationResult res = separate(mixture, &ann, lex, song_model, opts);

        AudioClip ref_voc = resample(load_wav(e.vocals));
        AudioClip ref_acc = resample(load_wav(e.accompaniment));
        size_t n = res.vocals.samples.size();
        auto to_d = [n](const std::vector<float>& v) {
            std::vector<double> d(n, 0.0);
            for (size_t k = 0; k < n && k < v.size(); ++k) d[k] = v[k];
            return d;
        };
        auto scores = bss_eval(to_d(ref_voc.samples), to_d(ref_acc.samples),
                               to_d(res.vocals.samples), to_d(res.accompaniment.samples));
        TrackEval te;
        te.track_id = e.id;
        te.vocals = scores[0];
        te.accompaniment = scores[1];
        te.silence = pes_eps(to_d(ref_voc.samples), to_d(res.vocals.samples));
        tracks[(size_t)i] = te;
    }

    EvalReport report = make_report(std::move(tracks));
    fs::create_directories(rc.out);
    write_report_text(rc.out + "/report.txt", report);
    write_report_tsv(rc.out + "/report.tsv", report);

    auto show = [](const char* name, const MetricSummary& s) {
        std::cout << name << " median ";
        if (s.median) std::cout << std::fixed << std::setprecision(3) << *s.median;
        else std::cout << "NA";
        std::cout << " (excluded " << s.excluded << ")\n";
    };
    show("SDR vocals", report.sdr_vocals);
    show("SDR accompaniment", report.sdr_accompaniment);
    show("PES", report.pes);
    show("EPS", report.eps);

    if (!rc.baseline.empty()) {
        EvalReport base = load_report_tsv(rc.baseline);
        std::vector<double> a, b;
        for (const auto& t : report.tracks)
            for (const auto& bt : base.tracks)
                if (bt.track_id == t.track_id && t.vocals.defined && bt.vocals.defined) {
                    a.push_back(t.vocals.sdr);
                    b.push_back(bt.vocals.sdr);
                }
        if (a.size() >= 2) {
            TTestResult tt = paired_t_test(a, b);
            std::cout << "paired t-test vs baseline (vocal SDR): t=" << tt.t << " p=" << tt.p
                      << " n=" << tt.n << (tt.zero_variance ? " (zero variance)" : "") << "\n";
        } else {
            std::cerr << "paired t-test skipped: fewer than 2 matched tracks\n";
        }
    }
    return 0;
}

int cmd_count_params(RunConfig& rc) {
    UNetConfig cfg = model_config(rc);
    std::cout << std::left << std::setw(8) << "variant" << std::setw(14) << "parameters"
              << "note\n";
    for (const auto& v : model_variants()) {
        long n = param_count(v, cfg);
        std::cout << std::left << std::setw(8) << v << std::setw(14) << n
                  << (v == "unet" ? "total" : "increment over unet") << "\n";
    }
    return 0;
}

int cmd_grad_check(RunConfig& rc) {
    struct Case {
        std::string name;
        std::function<GradCheckReport()> run;
    };
    std::mt19937 rng(rc.seed);
    auto randt = [&rng](const Shape& s) {
        Tensor<float> t = Tensor<float>::zeros(s);
        std::uniform_real_distribution<float> u(-1.0f, 1.0f);
        for (auto& v : t.data()) v = u(rng);
        return t;
    };
    std::vector<Case> cases;
    cases.push_back({"add", [&] {
                         return grad_check<float>(
                             [](const std::vector<Tensor<float>>& in) { return add(in[0], in[1]); },
                             {randt({4, 5}), randt({4, 5})}, rc.seed);
                     }});
    cases.push_back({"mul", [&] {
                         return grad_check<float>(
                             [](const std::vector<Tensor<float>>& in) { return mul(in[0], in[1]); },
                             {randt({4, 5}), randt({4, 5})}, rc.seed);
                     }});
    cases.push_back({"sigmoid", [&] {
                         return grad_check<float>(
                             [](const std::vector<Tensor<float>>& in) { return sigmoid(in[0]); },
                             {randt({6, 3})}, rc.seed);
                     }});
    cases.push_back({"softmax", [&] {
                         return grad_check<float>(
                             [](const std::vector<Tensor<float>>& in) { return softmax(in[0], 1); },
                             {randt({5, 7})}, rc.seed);
                     }});
    cases.push_back({"matmul", [&] {
                         return grad_check<float>(
                             [](const std::vector<Tensor<float>>& in) {
                                 return matmul(in[0], in[1]);
                             },
                             {randt({3, 4}), randt({4, 5})}, rc.seed);
                     }});
    cases.push_back({"conv2d", [&] {
                         return grad_check<float>(
                             [](const std::vector<Tensor<float>>& in) {
                                 return conv2d(in[0], in[1]);
                             },
                             {randt({1, 8, 8, 2}), randt({5, 5, 2, 3})}, rc.seed);
                     }});
    cases.push_back({"conv2d_transpose", [&] {
                         return grad_check<float>(
                             [](const std::vector<Tensor<float>>& in) {
                                 return conv2d_transpose(in[0], in[1]);
                             },
                             {randt({1, 4, 4, 3}), randt({5, 5, 2, 3})}, rc.seed);
                     }});
    bool all_ok = true;
    for (auto& c : cases) {
        GradCheckReport rep = c.run();
        bool ok = rep.passed(1e-3);
        all_ok = all_ok && ok;
        std::cout << c.name << ": " << (ok ? "pass" : "FAIL") << " (max rel err "
                  << rep.max_rel_error << ", " << rep.coords_checked << " coords)\n";
    }
    return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phoneme-conditioned singing-voice separation"};
    app.require_subcommand(1);

    RunConfig rc;
    std::string config_path;
    std::string profiles_path;
    std::vector<std::string> track_paths;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration");
        sub->add_option("--seed", rc.seed, "random seed");
        sub->add_option("--jobs", rc.jobs, "parallel workers");
        sub->add_option("--out", rc.out, "output directory");
    };

    CLI::App* synth = app.add_subcommand("synth-data", "generate a synthetic corpus");
    add_common(synth);

    CLI::App* build = app.add_subcommand("build-sources", "merge tracks into stems");
    add_common(build);
    build->add_option("profiles", profiles_path, "voice-probability file")->required();
    build->add_option("tracks", track_paths, "track WAV files")->required();

    CLI::App* split = app.add_subcommand("split", "partition a manifest by agreement");
    add_common(split);
    split->add_option("manifest", rc.manifest, "dataset manifest")->required();

    CLI::App* train_cmd = app.add_subcommand("train", "train a separation model");
    add_common(train_cmd);
    train_cmd->add_option("--variant", rc.variant, "model variant name");
    train_cmd->add_option("--model", rc.model, "checkpoint to resume from");

    CLI::App* sep = app.add_subcommand("separate", "separate one mixture");
    add_common(sep);
    sep->add_option("--mixture", rc.mixture, "mixture WAV")->required();
    sep->add_option("--annotations", rc.annotations, "word annotation JSON");
    sep->add_option("--model", rc.model, "model checkpoint");
    sep->add_option("--mask-override", rc.mask_override, "constant mask in [0,1]");

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "evaluate on a manifest");
    add_common(eval_cmd);
    eval_cmd->add_option("manifest", rc.manifest, "test manifest")->required();
    eval_cmd->add_option("--model", rc.model, "model checkpoint");
    eval_cmd->add_option("--baseline", rc.baseline, "baseline report.tsv for a paired t-test");
    eval_cmd->add_option("--mask-override", rc.mask_override, "constant mask in [0,1]");

    CLI::App* params = app.add_subcommand("count-params", "parameter table for all variants");
    add_common(params);
    params->add_option("--variant", rc.variant, "unused; accepted for symmetry");

    CLI::App* gc = app.add_subcommand("grad-check", "finite-difference checks per op");
    add_common(gc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        // file values first, then flags re-applied on top (flags win)
        if (!config_path.empty()) {
            RunConfig from_file;
            apply_config_file(from_file, config_path);
            RunConfig merged = from_file;
            auto keep = [&](auto& dst, const auto& flag_val, const auto& def) {
                if (!(flag_val == def)) dst = flag_val;
            };
            RunConfig defaults;
            keep(merged.seed, rc.seed, defaults.seed);
            keep(merged.jobs, rc.jobs, defaults.jobs);
            keep(merged.out, rc.out, defaults.out);
            keep(merged.variant, rc.variant, defaults.variant);
            keep(merged.model, rc.model, defaults.model);
            keep(merged.mixture, rc.mixture, defaults.mixture);
            keep(merged.annotations, rc.annotations, defaults.annotations);
            keep(merged.baseline, rc.baseline, defaults.baseline);
            keep(merged.manifest, rc.manifest, defaults.manifest);
            keep(merged.mask_override, rc.mask_override, defaults.mask_override);
            rc = merged;
        }

        if (synth->parsed()) return cmd_synth_data(rc);
        if (build->parsed()) return cmd_build_sources(rc, profiles_path, track_paths);
        if (split->parsed()) return cmd_split(rc);
        if (train_cmd->parsed()) return cmd_train(rc);
        if (sep->parsed()) return cmd_separate(rc);
        if (eval_cmd->parsed()) return cmd_evaluate(rc);
        if (params->parsed()) return cmd_count_params(rc);
        if (gc->parsed()) return cmd_grad_check(rc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

#include "slens/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slens/io.hpp"
#include "slens/synthgen.hpp"

namespace slens::heur {

namespace {

std::filesystem::path to_path(const std::string& s) { return std::filesystem::path(s); }

std::vector<std::filesystem::path> to_paths(const std::vector<std::string>& v) {
    std::vector<std::filesystem::path> out;
    for (const auto& s : v) out.emplace_back(s);
    return out;
}

nn::Mat<float> one_hot(const std::vector<std::uint16_t>& labels, int k) {
    nn::Mat<float> t = nn::Mat<float>::Zero(static_cast<Eigen::Index>(labels.size()), k);
    for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<Eigen::Index>(i), labels[i]) = 1.0f;
    return t;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw UsageError("train config: epochs must be >= 1");
    if (batch_size < 1) throw UsageError("train config: batch size must be >= 1");
    if (label_mode != "natural" && label_mode != "shuffled")
        throw UsageError("train config: label mode must be natural or shuffled");
    if (eval_split != "train" && eval_split != "test")
        throw UsageError("train config: eval split must be train or test");
    double prev = 0.0;
    for (const double r : eval_radii) {
        if (r <= prev) throw UsageError("train config: eval radii must be positive ascending");
        prev = r;
    }
    if (mixup_alpha > 0.0 && adv_train)
        throw UsageError("train config: mixup and adversarial training are mutually exclusive");
    if (mixup_alpha < 0.0) throw UsageError("train config: mixup alpha must be positive");
}

void mixup_batch_fixed(Batch<float>& images, nn::Mat<float>& targets, double lambda,
                       const std::vector<std::size_t>& pairing) {
    Batch<float> mixed = images;
    nn::Mat<float> mixed_t = targets;
    const float lam = static_cast<float>(lambda);
    const std::size_t stride = images.per_sample();
    for (int s = 0; s < images.n; ++s) {
        const float* a = images.sample(s);
        const float* b = images.sample(static_cast<int>(pairing[s]));
        float* m = mixed.sample(s);
        for (std::size_t k = 0; k < stride; ++k) m[k] = lam * a[k] + (1.0f - lam) * b[k];
        mixed_t.row(s) = lam * targets.row(s) +
                         (1.0f - lam) * targets.row(static_cast<Eigen::Index>(pairing[s]));
    }
    images = std::move(mixed);
    targets = std::move(mixed_t);
}

void mixup_batch(Batch<float>& images, nn::Mat<float>& targets, double alpha, Rng& rng,
                 double* lambda_out) {
    if (alpha <= 0.0) throw UsageError("mixup: alpha must be positive");
    const double lambda = rng.beta(alpha, alpha);
    if (lambda_out) *lambda_out = lambda;
    const auto perm = rng.permutation(static_cast<std::size_t>(images.n));
    mixup_batch_fixed(images, targets, lambda, perm);
}

std::pair<data::Dataset, data::Dataset> load_data(const DataSpec& spec) {
    data::Dataset train, test;
    if (spec.format == "idx") {
        train = data::load_idx(to_path(spec.train_images), to_path(spec.train_labels));
        test = data::load_idx(to_path(spec.test_images), to_path(spec.test_labels));
    } else if (spec.format == "cifar") {
        train = data::load_cifar(to_paths(spec.train_files));
        test = data::load_cifar(to_paths(spec.test_files));
    } else if (spec.format == "splz") {
        if (spec.train_files.size() != 1 || spec.test_files.size() != 1)
            throw UsageError("splz source needs exactly one train and one test file");
        train = data::load_splz(to_path(spec.train_files[0]));
        test = data::load_splz(to_path(spec.test_files[0]));
    } else if (spec.format == "synth") {
        train = synth::make_digits(spec.synth_train, spec.synth_channels,
                                   derive_seed(spec.synth_seed, "synth-train"));
        test = synth::make_digits(spec.synth_test, spec.synth_channels,
                                  derive_seed(spec.synth_seed, "synth-test"));
    } else {
        throw UsageError("unknown dataset format: " + spec.format);
    }
    return {data::take(train, spec.cap_train), data::take(test, spec.cap_test)};
}

namespace {

struct EvalVariants {
    std::vector<data::Dataset> lfc;
    std::vector<data::Dataset> hfc;
};

EvalVariants make_eval_variants(const data::Dataset& tracked, const std::vector<double>& radii) {
    EvalVariants v;
    for (const double r : radii) {
        v.lfc.push_back(data::transform_dataset(tracked, r, data::Part::low,
                                                spectrum::Rescale::minmax));
        v.hfc.push_back(data::transform_dataset(tracked, r, data::Part::high,
                                                spectrum::Rescale::minmax));
    }
    return v;
}

TrainResult run_training(const TrainConfig& config, data::Dataset train_ds,
                         data::Dataset test_ds) {
    config.validate();
    if (train_ds.empty() || test_ds.empty()) throw DataError("train: empty dataset");
    const Image& probe = train_ds.images[0];

    nn::ArchConfig arch;
    arch.name = config.arch;
    arch.in_c = probe.c;
    arch.in_h = probe.h;
    arch.in_w = probe.w;
    arch.num_classes = train_ds.num_classes;
    arch.batchnorm = config.batchnorm;
    arch.dropout = config.dropout_p;

    if (config.label_mode == "shuffled")
        train_ds = data::shuffle_labels(train_ds, config.shuffle_seed);

    const data::Dataset& tracked = config.eval_split == "train" ? train_ds : test_ds;
    const EvalVariants variants = make_eval_variants(tracked, config.eval_radii);

    nn::Network net = nn::init_network(arch, derive_seed(config.seed, "init"));
    nn::OptimState<float> opt(config.optim);
    data::BatchPlan plan{config.batch_size, derive_seed(config.seed, "batching"), true};

    TrainRecord record;
    record.radii = config.eval_radii;
    record.eval_split = config.eval_split;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        net.set_mode(nn::Mode::train);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        const auto epoch_batches = data::batches(train_ds, plan, static_cast<std::uint64_t>(epoch));
        for (std::size_t b = 0; b < epoch_batches.size(); ++b) {
            const std::uint64_t step_id =
                static_cast<std::uint64_t>(epoch) * 1000000ULL + b;
            net.begin_step(derive_seed(config.seed, "step", step_id));
            Batch<float> x = nn::to_batch(train_ds, epoch_batches[b]);
            const auto labels = nn::gather_labels(train_ds, epoch_batches[b]);
            double loss;
            if (config.mixup_alpha > 0.0) {
                Rng rng(derive_seed(config.seed, "mixup", step_id));
                nn::Mat<float> targets = one_hot(labels, train_ds.num_classes);
                mixup_batch(x, targets, config.mixup_alpha, rng);
                loss = net.loss_and_grad_soft(x, targets);
            } else if (config.adv_train) {
                adv::AttackSpec threat = config.threat;
                threat.seed = derive_seed(config.seed, "adv-train", step_id);
                x = adv::pgd(net, x, labels, threat);
                net.set_mode(nn::Mode::train);
                loss = net.loss_and_grad(x, labels);
            } else {
                loss = net.loss_and_grad(x, labels);
            }
            if (!std::isfinite(loss)) throw NumericError("training loss is not finite");
            opt.step(net);
            loss_sum += loss;
            ++steps;
        }

        EpochRow row;
        row.epoch = epoch;
        row.train_loss = loss_sum / static_cast<double>(steps);
        row.train_acc = nn::accuracy(net, train_ds);
        row.test_acc = nn::accuracy(net, test_ds);
        for (std::size_t i = 0; i < config.eval_radii.size(); ++i) {
            row.lfc_acc.push_back(nn::accuracy(net, variants.lfc[i]));
            row.hfc_acc.push_back(nn::accuracy(net, variants.hfc[i]));
        }
        record.rows.push_back(std::move(row));
    }
    net.set_mode(nn::Mode::eval);
    return {std::move(record), std::move(net)};
}

}  // namespace

TrainResult train(const TrainConfig& config) {
    auto [train_ds, test_ds] = load_data(config.data);
    return run_training(config, std::move(train_ds), std::move(test_ds));
}

TrainResult train_on_component(const TrainConfig& config, data::Part part, double r,
                               spectrum::Rescale rescale) {
    auto [train_ds, test_ds] = load_data(config.data);
    data::Dataset component = data::transform_dataset(train_ds, r, part, rescale);
    return run_training(config, std::move(component), std::move(test_ds));
}

std::vector<TrainResult> batch_size_sweep(const TrainConfig& config,
                                          const std::vector<int>& sizes) {
    if (sizes.empty()) throw UsageError("batch size sweep: empty size list");
    std::vector<TrainResult> out;
    for (const int b : sizes) {
        TrainConfig c = config;
        c.batch_size = b;
        out.push_back(train(c));
    }
    return out;
}

int epochs_to_reach_fraction(const TrainRecord& rec, double frac) {
    if (rec.rows.empty()) return 0;
    const double target = frac * rec.rows.back().train_acc;
    for (const auto& row : rec.rows)
        if (row.train_acc >= target) return row.epoch;
    return rec.rows.back().epoch;
}

std::vector<BnLfcArm> batchnorm_lfc_experiment(const TrainConfig& config,
                                               const std::vector<double>& radii) {
    if (config.batchnorm) throw UsageError("bn-lfc: leave the batchnorm toggle unset");
    std::vector<BnLfcArm> out;
    for (const double r : radii) {
        BnLfcArm arm;
        arm.r = r;
        TrainConfig with_bn = config;
        with_bn.batchnorm = true;
        TrainConfig without_bn = config;
        without_bn.batchnorm = false;
        arm.with_bn = train_on_component(with_bn, data::Part::low, r).record;
        arm.without_bn = train_on_component(without_bn, data::Part::low, r).record;
        arm.epochs_to_90_bn = epochs_to_reach_fraction(arm.with_bn, 0.9);
        arm.epochs_to_90_nobn = epochs_to_reach_fraction(arm.without_bn, 0.9);
        out.push_back(std::move(arm));
    }
    return out;
}

std::string TrainRecord::to_csv() const {
    std::ostringstream os;
    os << "epoch,split,metric,r,value\n";
    for (const auto& row : rows) {
        os << row.epoch << ",train,acc,," << io::fmt(row.train_acc) << "\n";
        os << row.epoch << ",test,acc,," << io::fmt(row.test_acc) << "\n";
        os << row.epoch << ",train,loss,," << io::fmt(row.train_loss) << "\n";
        for (std::size_t i = 0; i < radii.size(); ++i) {
            os << row.epoch << "," << eval_split << "_lfc,acc," << io::fmt(radii[i]) << ","
               << io::fmt(row.lfc_acc[i]) << "\n";
            os << row.epoch << "," << eval_split << "_hfc,acc," << io::fmt(radii[i]) << ","
               << io::fmt(row.hfc_acc[i]) << "\n";
        }
    }
    return os.str();
}

TrainRecord TrainRecord::from_csv(const std::string& text, const std::string& name) {
    TrainRecord rec;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "epoch,split,metric,r,value")
        throw DataError(name + ": unexpected TrainRecord CSV header");
    bool radii_done = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string epoch_s, split, metric, r_s, value_s;
        std::getline(ls, epoch_s, ',');
        std::getline(ls, split, ',');
        std::getline(ls, metric, ',');
        std::getline(ls, r_s, ',');
        std::getline(ls, value_s, ',');
        const int epoch = std::stoi(epoch_s);
        const double value = std::stod(value_s);
        if (rec.rows.empty() || rec.rows.back().epoch != epoch) {
            if (!rec.rows.empty()) radii_done = true;
            rec.rows.push_back(EpochRow{});
            rec.rows.back().epoch = epoch;
        }
        EpochRow& row = rec.rows.back();
        if (split == "train" && metric == "acc") {
            row.train_acc = value;
        } else if (split == "test" && metric == "acc") {
            row.test_acc = value;
        } else if (split == "train" && metric == "loss") {
            row.train_loss = value;
        } else if (split.size() > 4 && split.substr(split.size() - 4) == "_lfc") {
            row.lfc_acc.push_back(value);
            if (!radii_done) {
                rec.radii.push_back(std::stod(r_s));
                rec.eval_split = split.substr(0, split.size() - 4);
            }
        } else if (split.size() > 4 && split.substr(split.size() - 4) == "_hfc") {
            row.hfc_acc.push_back(value);
        } else {
            throw DataError(name + ": unexpected row '" + line + "'");
        }
    }
    if (rec.eval_split.empty()) rec.eval_split = "train";
    return rec;
}

}  // namespace slens::heur

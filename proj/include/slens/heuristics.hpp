#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "slens/adversarial.hpp"
#include "slens/dataset.hpp"
#include "slens/network.hpp"

namespace slens::heur {

// Where training/test data comes from. "synth" is the built-in procedural
// digit generator (no external files needed).
struct DataSpec {
    std::string format = "synth";  // idx | cifar | splz | synth
    std::string train_images, train_labels, test_images, test_labels;  // idx
    std::vector<std::string> train_files, test_files;                  // cifar / splz
    int synth_train = 2000;
    int synth_test = 500;
    int synth_channels = 1;
    std::uint64_t synth_seed = 1;
    std::size_t cap_train = 0;  // 0 = no cap
    std::size_t cap_test = 0;
};

struct TrainConfig {
    DataSpec data;
    std::string label_mode = "natural";  // natural | shuffled
    std::uint64_t shuffle_seed = 0;
    std::string arch = "lenet-small";
    bool batchnorm = false;
    double dropout_p = 0.0;
    double mixup_alpha = 0.0;  // 0 disables mixup
    bool adv_train = false;
    adv::AttackSpec threat{};  // adversarial-training threat model
    nn::OptimSpec optim{};
    int epochs = 100;
    int batch_size = 100;
    std::vector<double> eval_radii = {4, 8, 12, 16};
    std::string eval_split = "train";  // split tracked for the LFC/HFC curves
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochRow {
    int epoch = 0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double train_loss = 0.0;
    std::vector<double> lfc_acc;  // parallel to radii
    std::vector<double> hfc_acc;
};

struct TrainRecord {
    std::vector<double> radii;
    std::string eval_split;
    std::vector<EpochRow> rows;

    // header: epoch,split,metric,r,value
    std::string to_csv() const;
    static TrainRecord from_csv(const std::string& text, const std::string& name);
};

struct TrainResult {
    TrainRecord record;
    nn::Network net;
};

// Convex combination of the batch with a seeded within-batch permutation of
// itself; lambda ~ Beta(alpha, alpha), one draw per batch. Labels become
// probability vectors.
void mixup_batch(Batch<float>& images, nn::Mat<float>& targets, double alpha, Rng& rng,
                 double* lambda_out = nullptr);

// Deterministic core of mixup with the mixing weight and pairing given.
void mixup_batch_fixed(Batch<float>& images, nn::Mat<float>& targets, double lambda,
                       const std::vector<std::size_t>& pairing);

std::pair<data::Dataset, data::Dataset> load_data(const DataSpec& spec);

TrainResult train(const TrainConfig& config);

// Train on the LFC/HFC variant of the training set (min-max rescaled by
// default); test accuracy is still measured on the original test set.
TrainResult train_on_component(const TrainConfig& config, data::Part part, double r,
                               spectrum::Rescale rescale = spectrum::Rescale::minmax);

std::vector<TrainResult> batch_size_sweep(const TrainConfig& config,
                                          const std::vector<int>& sizes);

struct BnLfcArm {
    double r = 0.0;
    TrainRecord with_bn;
    TrainRecord without_bn;
    int epochs_to_90_bn = 0;  // epochs to reach 90% of final train accuracy
    int epochs_to_90_nobn = 0;
};

// For each radius, trains with/without batchnorm on LFC(r) data and records
// convergence speed plus final accuracies.
std::vector<BnLfcArm> batchnorm_lfc_experiment(const TrainConfig& config,
                                               const std::vector<double>& radii);

// First epoch whose train accuracy reaches frac * final train accuracy.
int epochs_to_reach_fraction(const TrainRecord& rec, double frac);

}  // namespace slens::heur

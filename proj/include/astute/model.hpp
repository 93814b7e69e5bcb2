#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "astute/types.hpp"

namespace astute {

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;  // row-major

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
    const double* row_ptr(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
};

// sigmoid(w.x + b)
struct LinearModel {
    std::vector<double> w;
    double b = 0.0;
};

// ReLU hidden layers, scalar logit through sigmoid
struct MlpModel {
    std::vector<Matrix> weights;              // weights[l]: out x in
    std::vector<std::vector<double>> biases;  // biases[l]: out

    int input_dim() const { return weights.empty() ? 0 : weights.front().cols; }
};

// sigmoid(sum_j c_j exp(-gamma ||x - x_j||^2) + b)
struct KernelModel {
    Matrix centers;  // m x d
    std::vector<double> coeff;
    double gamma = 1.0;
    double bias = 0.0;
};

using Model = std::variant<LinearModel, MlpModel, KernelModel>;

enum class Arch { mlp2, mlp4, linear, kernel };

std::string to_string(Arch a);
Arch arch_from_string(const std::string& s);

struct TrainConfig {
    int epochs = 2;
    int batch_size = 1000;
    double learning_rate = 0.1;
    double momentum = 0.9;
    std::optional<double> lipschitz_cap;  // per-layer operator-norm cap
    std::uint64_t seed = 0;
    int hidden_width = 0;    // 0 -> 200 (32 is the convention for real tabular data)
    int kernel_max_centers = 1000;
    double kernel_ridge = 1e-3;  // scaled by the center count in the solve

    void validate() const;
};

struct TrainMeta {
    double train_accuracy = 0.0;
    double test_accuracy = -1.0;  // -1 when no test set was supplied
    double final_loss = 0.0;
    std::string arch;
};

struct TrainedModel {
    Model model;
    TrainMeta meta;
};

int model_input_dim(const Model& m);

double predict(const Model& m, std::span<const double> x);

// n inputs of dimension d, row-major; out receives n probabilities. Matches
// predict() bit-for-bit but processes inputs in blocks for throughput.
void predict_batch(const Model& m, const double* xs, std::size_t n, std::size_t d,
                   double* out);

// all samples of a dataset, parallel across rows
std::vector<double> predict_dataset(const Model& m, const Dataset& data);

namespace serial {
std::vector<double> predict_dataset(const Model& m, const Dataset& data);
}

TrainedModel train(const Dataset& data, Arch arch, const TrainConfig& cfg,
                   const Dataset* test_data = nullptr);

// Rescales W so its operator norm does not exceed cap. For p=2 the norm is
// the spectral norm obtained by power iteration; p=1 uses the exact max
// column sum. Matrices already inside the cap come back unchanged.
Matrix project_lipschitz(const Matrix& W, double cap, NormOrder ord);

// induced operator norm used by the projection and the analytic bounds
double operator_norm(const Matrix& W, NormOrder ord);
double spectral_norm(const Matrix& W);

// Analytic Lipschitz upper bound of the probability output w.r.t. the p-norm:
// dual-norm of the weights over 4 for the linear model, product of layer
// operator norms over 4 for MLPs. Kernel machines report nothing.
std::optional<double> known_lipschitz_upper(const Model& m, NormOrder ord);

std::string model_to_json(const TrainedModel& m);
TrainedModel model_from_json(const std::string& text);
void save_model(const TrainedModel& m, const std::string& path);
TrainedModel load_model(const std::string& path);

namespace detail {
// batch-mean binary cross-entropy and its gradient; exposed for the finite
// difference checks
struct MlpGrad {
    std::vector<Matrix> dW;
    std::vector<std::vector<double>> db;
};
double mlp_loss_and_grad(const MlpModel& m, const Dataset& data,
                         std::span<const std::size_t> batch, MlpGrad& grad);
}  // namespace detail

}  // namespace astute

#include "astute/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "astute/data.hpp"
#include "astute/io.hpp"
#include "astute/parallel.hpp"
#include "astute/rng.hpp"

namespace astute {

namespace {

constexpr std::uint64_t kInitSalt = 0x171717;
constexpr std::uint64_t kShuffleSalt = 0x5FF1E;
constexpr std::uint64_t kCenterSalt = 0xCE17E2;
constexpr int kBlock = 32;

// sigmoid clamped to the open interval (0, 1) in double precision
double squash(double logit) {
    double s = sigmoid(logit);
    if (s <= 0.0) s = std::numeric_limits<double>::min();
    const double top = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    if (s >= 1.0) s = top;
    return s;
}

double linear_logit(const LinearModel& m, std::span<const double> x) {
    double z = m.b;
    for (std::size_t i = 0; i < x.size(); ++i) z += m.w[i] * x[i];
    return z;
}

double mlp_logit(const MlpModel& m, std::span<const double> x) {
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        const Matrix& W = m.weights[l];
        next.assign(W.rows, 0.0);
        for (int j = 0; j < W.rows; ++j) {
            double acc = m.biases[l][j];
            const double* wr = W.row_ptr(j);
            for (int i = 0; i < W.cols; ++i) acc += wr[i] * cur[i];
            next[j] = acc;
        }
        if (l + 1 < m.weights.size())
            for (auto& v : next) v = v > 0.0 ? v : 0.0;
        cur.swap(next);
    }
    return cur[0];
}

double kernel_logit(const KernelModel& m, std::span<const double> x) {
    double z = m.bias;
    const int d = m.centers.cols;
    for (int c = 0; c < m.centers.rows; ++c) {
        const double* ctr = m.centers.row_ptr(c);
        double sq = 0.0;
        for (int i = 0; i < d; ++i) {
            const double t = x[i] - ctr[i];
            sq += t * t;
        }
        z += m.coeff[c] * std::exp(-m.gamma * sq);
    }
    return z;
}

// MLP forward over a block of inputs held feature-major (in[i*B + b]); the
// per-element accumulation order matches the single-input path exactly.
void mlp_block_forward(const MlpModel& m, const double* in_t, int nb, double* out) {
    const std::size_t maxw = [&] {
        std::size_t w = m.input_dim();
        for (const auto& W : m.weights) w = std::max<std::size_t>(w, W.rows);
        return w;
    }();
    std::vector<double> buf_a(maxw * kBlock), buf_b(maxw * kBlock);
    double* cur = buf_a.data();
    double* nxt = buf_b.data();
    std::copy(in_t, in_t + static_cast<std::size_t>(m.input_dim()) * kBlock, cur);

    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        const Matrix& W = m.weights[l];
        const bool hidden = l + 1 < m.weights.size();
        for (int j = 0; j < W.rows; ++j) {
            double* o = nxt + static_cast<std::size_t>(j) * kBlock;
            const double bj = m.biases[l][j];
            for (int b = 0; b < nb; ++b) o[b] = bj;
            const double* wr = W.row_ptr(j);
            for (int i = 0; i < W.cols; ++i) {
                const double w = wr[i];
                const double* src = cur + static_cast<std::size_t>(i) * kBlock;
                for (int b = 0; b < nb; ++b) o[b] += w * src[b];
            }
            if (hidden)
                for (int b = 0; b < nb; ++b) o[b] = o[b] > 0.0 ? o[b] : 0.0;
        }
        std::swap(cur, nxt);
    }
    for (int b = 0; b < nb; ++b) out[b] = squash(cur[b]);
}

}  // namespace

std::string to_string(Arch a) {
    switch (a) {
        case Arch::mlp2: return "mlp2";
        case Arch::mlp4: return "mlp4";
        case Arch::linear: return "linear";
        case Arch::kernel: return "kernel";
    }
    return "?";
}

Arch arch_from_string(const std::string& s) {
    if (s == "mlp2") return Arch::mlp2;
    if (s == "mlp4") return Arch::mlp4;
    if (s == "linear") return Arch::linear;
    if (s == "kernel") return Arch::kernel;
    throw std::invalid_argument("unknown arch: " + s);
}

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
    if (lipschitz_cap && !(*lipschitz_cap > 0.0))
        throw std::invalid_argument("TrainConfig: lipschitz_cap must be > 0");
    if (hidden_width < 0) throw std::invalid_argument("TrainConfig: hidden_width must be >= 0");
    if (kernel_max_centers < 1)
        throw std::invalid_argument("TrainConfig: kernel_max_centers must be >= 1");
}

int model_input_dim(const Model& m) {
    if (const auto* lin = std::get_if<LinearModel>(&m)) return static_cast<int>(lin->w.size());
    if (const auto* mlp = std::get_if<MlpModel>(&m)) return mlp->input_dim();
    return std::get<KernelModel>(m).centers.cols;
}

double predict(const Model& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model_input_dim(m))
        throw std::invalid_argument("predict: input dimension mismatch");
    if (const auto* lin = std::get_if<LinearModel>(&m)) return squash(linear_logit(*lin, x));
    if (const auto* mlp = std::get_if<MlpModel>(&m)) return squash(mlp_logit(*mlp, x));
    return squash(kernel_logit(std::get<KernelModel>(m), x));
}

void predict_batch(const Model& m, const double* xs, std::size_t n, std::size_t d,
                   double* out) {
    if (static_cast<int>(d) != model_input_dim(m))
        throw std::invalid_argument("predict_batch: input dimension mismatch");
    if (const auto* mlp = std::get_if<MlpModel>(&m)) {
        std::vector<double> in_t(d * kBlock);
        for (std::size_t base = 0; base < n; base += kBlock) {
            const int nb = static_cast<int>(std::min<std::size_t>(kBlock, n - base));
            for (std::size_t i = 0; i < d; ++i)
                for (int b = 0; b < nb; ++b)
                    in_t[i * kBlock + b] = xs[(base + b) * d + i];
            mlp_block_forward(*mlp, in_t.data(), nb, out + base);
        }
        return;
    }
    for (std::size_t r = 0; r < n; ++r)
        out[r] = predict(m, {xs + r * d, d});
}

std::vector<double> predict_dataset(const Model& m, const Dataset& data) {
    const std::size_t n = data.size();
    const std::size_t d = data.dim;
    std::vector<double> out(n);
    const std::size_t chunk = 256;
#pragma omp parallel for schedule(dynamic) num_threads(max_jobs())
    for (std::int64_t c = 0; c < static_cast<std::int64_t>((n + chunk - 1) / chunk); ++c) {
        const std::size_t lo = c * chunk;
        const std::size_t len = std::min(chunk, n - lo);
        predict_batch(m, data.features.data() + lo * d, len, d, out.data() + lo);
    }
    return out;
}

namespace serial {
std::vector<double> predict_dataset(const Model& m, const Dataset& data) {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(m, data.row(i));
    return out;
}
}  // namespace serial

namespace detail {

double mlp_loss_and_grad(const MlpModel& m, const Dataset& data,
                         std::span<const std::size_t> batch, MlpGrad& grad) {
    const std::size_t L = m.weights.size();
    grad.dW.clear();
    grad.db.clear();
    for (std::size_t l = 0; l < L; ++l) {
        grad.dW.emplace_back(m.weights[l].rows, m.weights[l].cols);
        grad.db.emplace_back(m.weights[l].rows, 0.0);
    }

    std::vector<std::vector<double>> act(L + 1);  // post-activation per layer
    std::vector<std::vector<double>> pre(L);
    double loss = 0.0;

    for (const std::size_t idx : batch) {
        const auto x = data.row(idx);
        const double y = data.labels[idx];
        act[0].assign(x.begin(), x.end());
        for (std::size_t l = 0; l < L; ++l) {
            const Matrix& W = m.weights[l];
            pre[l].assign(W.rows, 0.0);
            for (int j = 0; j < W.rows; ++j) {
                double acc = m.biases[l][j];
                const double* wr = W.row_ptr(j);
                for (int i = 0; i < W.cols; ++i) acc += wr[i] * act[l][i];
                pre[l][j] = acc;
            }
            act[l + 1] = pre[l];
            if (l + 1 < L)
                for (auto& v : act[l + 1]) v = v > 0.0 ? v : 0.0;
        }

        const double z = pre[L - 1][0];
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));

        std::vector<double> delta{sigmoid(z) - y};
        for (std::size_t l = L; l-- > 0;) {
            const Matrix& W = m.weights[l];
            for (int j = 0; j < W.rows; ++j) {
                const double dj = delta[j];
                grad.db[l][j] += dj;
                double* gr = grad.dW[l].a.data() + static_cast<std::size_t>(j) * W.cols;
                for (int i = 0; i < W.cols; ++i) gr[i] += dj * act[l][i];
            }
            if (l == 0) break;
            std::vector<double> prev(W.cols, 0.0);
            for (int j = 0; j < W.rows; ++j) {
                const double dj = delta[j];
                const double* wr = W.row_ptr(j);
                for (int i = 0; i < W.cols; ++i) prev[i] += wr[i] * dj;
            }
            for (int i = 0; i < W.cols; ++i)
                if (pre[l - 1][i] <= 0.0) prev[i] = 0.0;
            delta.swap(prev);
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t l = 0; l < L; ++l) {
        for (auto& v : grad.dW[l].a) v *= inv;
        for (auto& v : grad.db[l]) v *= inv;
    }
    return loss * inv;
}

}  // namespace detail

namespace {

MlpModel make_mlp(const std::vector<int>& dims, std::uint64_t seed, bool zero_init) {
    MlpModel m;
    SeqRng rng(mix_seed(seed, kInitSalt));
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Matrix W(dims[l + 1], dims[l]);
        if (!zero_init) {
            const double a = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
            for (auto& v : W.a) v = (2.0 * rng.uniform() - 1.0) * a;
        }
        m.weights.push_back(std::move(W));
        m.biases.emplace_back(dims[l + 1], 0.0);
    }
    return m;
}

double accuracy(const Model& m, const Dataset& data) {
    const auto probs = predict_dataset(m, data);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        hit += (probs[i] >= 0.5 ? 1 : 0) == data.labels[i];
    return static_cast<double>(hit) / static_cast<double>(probs.size());
}

double mean_bce(const Model& m, const Dataset& data) {
    const auto probs = predict_dataset(m, data);
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        loss += data.labels[i] ? -std::log(p) : -std::log1p(-p);
    }
    return loss / static_cast<double>(probs.size());
}

MlpModel train_mlp(const Dataset& data, const std::vector<int>& dims,
                   const TrainConfig& cfg, bool zero_init) {
    MlpModel m = make_mlp(dims, cfg.seed, zero_init);

    std::vector<Matrix> velW;
    std::vector<std::vector<double>> velB;
    for (const auto& W : m.weights) {
        velW.emplace_back(W.rows, W.cols);
        velB.emplace_back(W.rows, 0.0);
    }

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    detail::MlpGrad grad;
    const NormOrder l2{2.0};

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        SeqRng shuffle(mix_seed(cfg.seed, kShuffleSalt + epoch));
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[shuffle.below(i + 1)]);

        for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
            const std::size_t len =
                std::min<std::size_t>(cfg.batch_size, order.size() - lo);
            const double loss = detail::mlp_loss_and_grad(
                m, data, {order.data() + lo, len}, grad);
            if (!std::isfinite(loss))
                throw std::runtime_error(
                    "train: loss diverged to NaN/Inf; lower the learning rate");

            for (std::size_t l = 0; l < m.weights.size(); ++l) {
                for (std::size_t t = 0; t < velW[l].a.size(); ++t) {
                    velW[l].a[t] = cfg.momentum * velW[l].a[t] -
                                   cfg.learning_rate * grad.dW[l].a[t];
                    m.weights[l].a[t] += velW[l].a[t];
                }
                for (std::size_t t = 0; t < velB[l].size(); ++t) {
                    velB[l][t] = cfg.momentum * velB[l][t] -
                                 cfg.learning_rate * grad.db[l][t];
                    m.biases[l][t] += velB[l][t];
                }
                if (cfg.lipschitz_cap)
                    m.weights[l] = project_lipschitz(m.weights[l], *cfg.lipschitz_cap, l2);
            }
        }
    }
    return m;
}

// symmetric positive definite solve, in-place Cholesky
std::vector<double> cholesky_solve(Matrix A, std::vector<double> b) {
    const int n = A.rows;
    for (int j = 0; j < n; ++j) {
        double diag = A.at(j, j);
        for (int k = 0; k < j; ++k) diag -= A.at(j, k) * A.at(j, k);
        if (diag <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
        const double ljj = std::sqrt(diag);
        A.at(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double v = A.at(i, j);
            for (int k = 0; k < j; ++k) v -= A.at(i, k) * A.at(j, k);
            A.at(i, j) = v / ljj;
        }
    }
    for (int i = 0; i < n; ++i) {
        double v = b[i];
        for (int k = 0; k < i; ++k) v -= A.at(i, k) * b[k];
        b[i] = v / A.at(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double v = b[i];
        for (int k = i + 1; k < n; ++k) v -= A.at(k, i) * b[k];
        b[i] = v / A.at(i, i);
    }
    return b;
}

KernelModel fit_kernel(const Dataset& data, const TrainConfig& cfg) {
    const int d = data.dim;
    const std::size_t n = data.size();
    const std::size_t m = std::min<std::size_t>(cfg.kernel_max_centers, n);

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    SeqRng rng(mix_seed(cfg.seed, kCenterSalt));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    idx.resize(m);
    std::sort(idx.begin(), idx.end());

    KernelModel km;
    km.centers = Matrix(static_cast<int>(m), d);
    for (std::size_t c = 0; c < m; ++c) {
        const auto row = data.row(idx[c]);
        std::copy(row.begin(), row.end(), km.centers.a.begin() + c * d);
    }

    // bandwidth from the mean feature variance (the "scale" convention)
    const FeatureStats st = compute_stats(data);
    double mean_var = 0.0;
    for (double s : st.stddev) mean_var += s * s;
    mean_var /= d;
    km.gamma = mean_var > 0.0 ? 1.0 / (d * mean_var) : 1.0;

    if (cfg.epochs == 0) {  // unfitted model, mirrors the no-update contract
        km.coeff.assign(m, 0.0);
        return km;
    }

    std::vector<double> y(m);
    double ymean = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        y[c] = data.labels[idx[c]] ? 1.0 : -1.0;
        ymean += y[c];
    }
    ymean /= static_cast<double>(m);
    km.bias = ymean;

    Matrix K(static_cast<int>(m), static_cast<int>(m));
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a; b < m; ++b) {
            double sq = 0.0;
            const double* ra = km.centers.row_ptr(static_cast<int>(a));
            const double* rb = km.centers.row_ptr(static_cast<int>(b));
            for (int i = 0; i < d; ++i) {
                const double t = ra[i] - rb[i];
                sq += t * t;
            }
            const double k = std::exp(-km.gamma * sq);
            K.at(static_cast<int>(a), static_cast<int>(b)) = k;
            K.at(static_cast<int>(b), static_cast<int>(a)) = k;
        }
    const double ridge = cfg.kernel_ridge * static_cast<double>(m);
    for (std::size_t a = 0; a < m; ++a) K.at(static_cast<int>(a), static_cast<int>(a)) += ridge;

    std::vector<double> rhs(m);
    for (std::size_t c = 0; c < m; ++c) rhs[c] = y[c] - ymean;
    km.coeff = cholesky_solve(std::move(K), std::move(rhs));
    return km;
}

}  // namespace

TrainedModel train(const Dataset& data, Arch arch, const TrainConfig& cfg,
                   const Dataset* test_data) {
    data.validate();
    cfg.validate();
    const int d = data.dim;
    const int width = cfg.hidden_width > 0 ? cfg.hidden_width : 200;

    TrainedModel out;
    out.meta.arch = to_string(arch);

    switch (arch) {
        case Arch::linear: {
            const MlpModel m = train_mlp(data, {d, 1}, cfg, /*zero_init=*/true);
            LinearModel lin;
            lin.w.assign(m.weights[0].a.begin(), m.weights[0].a.end());
            lin.b = m.biases[0][0];
            out.model = std::move(lin);
            break;
        }
        case Arch::mlp2:
            out.model = train_mlp(data, {d, width, width, 1}, cfg, false);
            break;
        case Arch::mlp4:
            out.model = train_mlp(data, {d, width, width, width, width, 1}, cfg, false);
            break;
        case Arch::kernel:
            out.model = fit_kernel(data, cfg);
            break;
    }

    out.meta.train_accuracy = accuracy(out.model, data);
    out.meta.final_loss = mean_bce(out.model, data);
    if (test_data) out.meta.test_accuracy = accuracy(out.model, *test_data);
    return out;
}

double spectral_norm(const Matrix& W) {
    if (W.rows == 0 || W.cols == 0) return 0.0;
    double frob = 0.0;
    for (double v : W.a) frob += v * v;
    if (frob == 0.0) return 0.0;

    std::vector<double> v(W.cols, 1.0 / std::sqrt(static_cast<double>(W.cols)));
    std::vector<double> u(W.rows);
    double sigma = 0.0;
    int restart = 0;
    for (int it = 0; it < 200; ++it) {
        for (int j = 0; j < W.rows; ++j) {
            double acc = 0.0;
            const double* wr = W.row_ptr(j);
            for (int i = 0; i < W.cols; ++i) acc += wr[i] * v[i];
            u[j] = acc;
        }
        double un = 0.0;
        for (double x : u) un += x * x;
        un = std::sqrt(un);
        if (un == 0.0) {
            // start vector fell in the null space; restart from a basis vector
            if (restart >= W.cols) return 0.0;
            std::fill(v.begin(), v.end(), 0.0);
            v[restart++] = 1.0;
            continue;
        }
        for (auto& x : u) x /= un;
        std::vector<double> vn(W.cols, 0.0);
        for (int j = 0; j < W.rows; ++j) {
            const double* wr = W.row_ptr(j);
            for (int i = 0; i < W.cols; ++i) vn[i] += wr[i] * u[j];
        }
        double nn = 0.0;
        for (double x : vn) nn += x * x;
        nn = std::sqrt(nn);
        if (nn == 0.0) return un;
        for (auto& x : vn) x /= nn;
        v.swap(vn);
        const double prev = sigma;
        sigma = nn;  // ||W^T u|| with ||u||=1 converges to the top singular value
        if (it >= 49 && std::fabs(sigma - prev) <= 1e-7 * std::max(sigma, 1e-300)) break;
    }
    return sigma;
}

double operator_norm(const Matrix& W, NormOrder ord) {
    ord.validate();
    if (ord.p == 2.0) return spectral_norm(W);
    if (ord.p == 1.0) {
        double best = 0.0;
        for (int i = 0; i < W.cols; ++i) {
            double s = 0.0;
            for (int j = 0; j < W.rows; ++j) s += std::fabs(W.at(j, i));
            best = std::max(best, s);
        }
        return best;
    }
    throw std::invalid_argument("operator_norm: only p=1 and p=2 are supported");
}

Matrix project_lipschitz(const Matrix& W, double cap, NormOrder ord) {
    if (!(cap > 0.0)) throw std::invalid_argument("project_lipschitz: cap must be > 0");
    const double norm = operator_norm(W, ord);
    if (norm <= cap) return W;
    Matrix out = W;
    const double scale = cap / norm;
    for (auto& v : out.a) v *= scale;
    return out;
}

namespace {
double dual_norm(std::span<const double> w, double p) {
    if (p == 1.0) {
        double best = 0.0;
        for (double v : w) best = std::max(best, std::fabs(v));
        return best;
    }
    const double q = p / (p - 1.0);
    if (p == 2.0) {
        double s = 0.0;
        for (double v : w) s += v * v;
        return std::sqrt(s);
    }
    double s = 0.0;
    for (double v : w) s += std::pow(std::fabs(v), q);
    return std::pow(s, 1.0 / q);
}
}  // namespace

std::optional<double> known_lipschitz_upper(const Model& m, NormOrder ord) {
    ord.validate();
    if (const auto* lin = std::get_if<LinearModel>(&m))
        return dual_norm(lin->w, ord.p) / 4.0;
    if (const auto* mlp = std::get_if<MlpModel>(&m)) {
        double prod = 1.0;
        for (const auto& W : mlp->weights) prod *= operator_norm(W, ord);
        return prod / 4.0;
    }
    return std::nullopt;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& W) {
    return {{"rows", W.rows}, {"cols", W.cols}, {"w", W.a}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix W(j.at("rows").get<int>(), j.at("cols").get<int>());
    W.a = j.at("w").get<std::vector<double>>();
    if (W.a.size() != static_cast<std::size_t>(W.rows) * W.cols)
        throw std::invalid_argument("model json: matrix shape mismatch");
    return W;
}

}  // namespace

std::string model_to_json(const TrainedModel& m) {
    nlohmann::json j;
    j["format"] = "astute-model";
    j["meta"] = {{"arch", m.meta.arch},
                 {"train_accuracy", m.meta.train_accuracy},
                 {"test_accuracy", m.meta.test_accuracy},
                 {"final_loss", m.meta.final_loss}};
    if (const auto* lin = std::get_if<LinearModel>(&m.model)) {
        j["kind"] = "linear";
        j["linear"] = {{"w", lin->w}, {"b", lin->b}};
    } else if (const auto* mlp = std::get_if<MlpModel>(&m.model)) {
        j["kind"] = "mlp";
        nlohmann::json layers = nlohmann::json::array();
        for (std::size_t l = 0; l < mlp->weights.size(); ++l) {
            auto lj = matrix_to_json(mlp->weights[l]);
            lj["b"] = mlp->biases[l];
            layers.push_back(std::move(lj));
        }
        j["mlp"] = {{"layers", std::move(layers)}};
    } else {
        const auto& km = std::get<KernelModel>(m.model);
        j["kind"] = "kernel";
        j["kernel"] = {{"centers", matrix_to_json(km.centers)},
                       {"coeff", km.coeff},
                       {"gamma", km.gamma},
                       {"bias", km.bias}};
    }
    return j.dump(2) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "astute-model")
        throw std::invalid_argument("model json: unrecognized format");
    TrainedModel out;
    const auto& meta = j.at("meta");
    out.meta.arch = meta.value("arch", "");
    out.meta.train_accuracy = meta.value("train_accuracy", 0.0);
    out.meta.test_accuracy = meta.value("test_accuracy", -1.0);
    out.meta.final_loss = meta.value("final_loss", 0.0);

    const auto check_finite = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x))
                throw std::invalid_argument("model json: non-finite parameter");
    };

    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        LinearModel lin;
        lin.w = j.at("linear").at("w").get<std::vector<double>>();
        lin.b = j.at("linear").at("b").get<double>();
        check_finite(lin.w);
        out.model = std::move(lin);
    } else if (kind == "mlp") {
        MlpModel mlp;
        for (const auto& lj : j.at("mlp").at("layers")) {
            mlp.weights.push_back(matrix_from_json(lj));
            mlp.biases.push_back(lj.at("b").get<std::vector<double>>());
            if (mlp.biases.back().size() != static_cast<std::size_t>(mlp.weights.back().rows))
                throw std::invalid_argument("model json: bias shape mismatch");
            check_finite(mlp.weights.back().a);
            check_finite(mlp.biases.back());
        }
        if (mlp.weights.empty()) throw std::invalid_argument("model json: empty mlp");
        out.model = std::move(mlp);
    } else if (kind == "kernel") {
        KernelModel km;
        km.centers = matrix_from_json(j.at("kernel").at("centers"));
        km.coeff = j.at("kernel").at("coeff").get<std::vector<double>>();
        km.gamma = j.at("kernel").at("gamma").get<double>();
        km.bias = j.at("kernel").at("bias").get<double>();
        if (km.coeff.size() != static_cast<std::size_t>(km.centers.rows))
            throw std::invalid_argument("model json: coeff/centers mismatch");
        if (!(km.gamma > 0.0))
            throw std::invalid_argument("model json: kernel bandwidth must be > 0");
        check_finite(km.centers.a);
        check_finite(km.coeff);
        out.model = std::move(km);
    } else {
        throw std::invalid_argument("model json: unknown kind " + kind);
    }
    return out;
}

void save_model(const TrainedModel& m, const std::string& path) {
    write_text_atomic(path, model_to_json(m));
}

TrainedModel load_model(const std::string& path) { return model_from_json(read_text(path)); }

}  // namespace astute

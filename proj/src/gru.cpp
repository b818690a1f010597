#include "afdmisac/gru.hpp"

#include <algorithm>
#include <random>

namespace afdmisac {

namespace {

Mat sigmoid(const Mat& a) {
    return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

void GruConfig::validate() const {
    if (input_dim < 1) throw ValidationError("input_dim", "must be positive");
    if (hidden < 1) throw ValidationError("hidden", "must be positive");
    if (layers < 1) throw ValidationError("layers", "must be positive");
    if (proj < 1) throw ValidationError("proj", "must be positive");
    if (horizon < 1) throw ValidationError("horizon", "must be positive");
    if (window < 1) throw ValidationError("window", "must be positive");
}

std::string layer_tensor(int layer, const char* name) {
    return "l" + std::to_string(layer) + "." + name;
}

GruModel::GruModel(const GruConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::size_t off = 0;
    auto add = [&](std::string name, int r, int c) {
        specs_.push_back(TensorSpec{std::move(name), r, c, off});
        off += static_cast<std::size_t>(r) * c;
    };
    const int d = cfg_.hidden;
    for (int l = 0; l < cfg_.layers; ++l) {
        const int in = l == 0 ? cfg_.input_dim : d;
        for (const char* g : {"Wz", "Wr", "Wh"}) add(layer_tensor(l, g), d, in);
        for (const char* g : {"Uz", "Ur", "Uh"}) add(layer_tensor(l, g), d, d);
        for (const char* g : {"bz", "br", "bh"}) add(layer_tensor(l, g), d, 1);
    }
    add("proj.W", cfg_.proj, d);
    add("proj.b", cfg_.proj, 1);
    add("head.W", cfg_.output_dim(), cfg_.proj);
    add("head.b", cfg_.output_dim(), 1);
    params_.assign(off, 0.0);
}

const TensorSpec& GruModel::spec(const std::string& name) const {
    for (const auto& s : specs_)
        if (s.name == name) return s;
    throw Error("gru: no tensor named '" + name + "'");
}

MatMap GruModel::tensor(const std::string& name) {
    const auto& s = spec(name);
    return MatMap(params_.data() + s.offset, s.rows, s.cols);
}

ConstMatMap GruModel::tensor(const std::string& name) const {
    const auto& s = spec(name);
    return ConstMatMap(params_.data() + s.offset, s.rows, s.cols);
}

MatMap GruModel::view(std::vector<double>& buf, const std::string& name) const {
    const auto& s = spec(name);
    if (buf.size() != params_.size()) throw Error("gru: buffer size does not match parameter count");
    return MatMap(buf.data() + s.offset, s.rows, s.cols);
}

void GruModel::init_uniform(Rng& rng) {
    for (const auto& s : specs_) {
        // fan-in of the consuming layer
        const int fan = s.name.starts_with("head") ? cfg_.proj : cfg_.hidden;
        std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan), 1.0 / std::sqrt(fan));
        for (std::size_t i = 0; i < s.size(); ++i) params_[s.offset + i] = u(rng);
    }
}

void GruModel::set_zero() { std::fill(params_.begin(), params_.end(), 0.0); }

bool GruModel::finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

Mat GruModel::forward(std::span<const Mat> inputs, GruCache* cache) const {
    if (inputs.empty()) throw ValidationError("window", "empty input window");
    const Eigen::Index B = inputs[0].cols();
    for (const auto& x : inputs)
        if (x.rows() != cfg_.input_dim || x.cols() != B)
            throw ValidationError("window", "input shape must be input_dim x batch");
    const int d = cfg_.hidden;
    const std::size_t T = inputs.size();

    if (cache) {
        cache->layers.assign(cfg_.layers, {});
        cache->inputs.assign(inputs.begin(), inputs.end());
    }
    std::vector<Mat> seq(inputs.begin(), inputs.end());
    Mat h;
    for (int l = 0; l < cfg_.layers; ++l) {
        const auto Wz = tensor(layer_tensor(l, "Wz"));
        const auto Wr = tensor(layer_tensor(l, "Wr"));
        const auto Wh = tensor(layer_tensor(l, "Wh"));
        const auto Uz = tensor(layer_tensor(l, "Uz"));
        const auto Ur = tensor(layer_tensor(l, "Ur"));
        const auto Uh = tensor(layer_tensor(l, "Uh"));
        const auto bz = tensor(layer_tensor(l, "bz"));
        const auto br = tensor(layer_tensor(l, "br"));
        const auto bh = tensor(layer_tensor(l, "bh"));
        h = Mat::Zero(d, B);
        if (cache) cache->layers[l].resize(T);
        for (std::size_t t = 0; t < T; ++t) {
            const Mat& x = seq[t];
            Mat z = sigmoid((Wz * x + Uz * h).colwise() + bz.col(0));
            Mat r = sigmoid((Wr * x + Ur * h).colwise() + br.col(0));
            Mat rh = r.cwiseProduct(h);
            Mat n = ((Wh * x + Uh * rh).colwise() + bh.col(0)).array().tanh().matrix();
            Mat hn = h + z.cwiseProduct(n - h);
            if (cache) cache->layers[l][t] = GruCache::Step{x, std::move(z), std::move(r), n, h, std::move(rh)};
            h = std::move(hn);
            seq[t] = h;
        }
    }
    Mat p = (tensor("proj.W") * h).colwise() + tensor("proj.b").col(0);
    Mat y = (tensor("head.W") * p).colwise() + tensor("head.b").col(0);
    if (cfg_.residual)
        for (int h = 0; h < cfg_.horizon; ++h) y.middleRows(h * cfg_.input_dim, cfg_.input_dim) += inputs.back();
    if (cache) {
        cache->h_last = h;
        cache->proj = std::move(p);
    }
    return y;
}

void GruModel::backward(const GruCache& cache, const Mat& d_out, std::vector<double>& grad) const {
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
    const std::size_t T = cache.inputs.size();
    const Eigen::Index B = d_out.cols();
    const int d = cfg_.hidden;

    view(grad, "head.W").noalias() += d_out * cache.proj.transpose();
    view(grad, "head.b") += d_out.rowwise().sum();
    const Mat d_proj = tensor("head.W").transpose() * d_out;
    view(grad, "proj.W").noalias() += d_proj * cache.h_last.transpose();
    view(grad, "proj.b") += d_proj.rowwise().sum();

    // gradient w.r.t. each step's output of the current layer
    std::vector<Mat> d_seq(T, Mat::Zero(d, B));
    d_seq[T - 1] = tensor("proj.W").transpose() * d_proj;

    for (int l = cfg_.layers - 1; l >= 0; --l) {
        const auto Wz = tensor(layer_tensor(l, "Wz"));
        const auto Wr = tensor(layer_tensor(l, "Wr"));
        const auto Wh = tensor(layer_tensor(l, "Wh"));
        const auto Uz = tensor(layer_tensor(l, "Uz"));
        const auto Ur = tensor(layer_tensor(l, "Ur"));
        const auto Uh = tensor(layer_tensor(l, "Uh"));
        auto gWz = view(grad, layer_tensor(l, "Wz"));
        auto gWr = view(grad, layer_tensor(l, "Wr"));
        auto gWh = view(grad, layer_tensor(l, "Wh"));
        auto gUz = view(grad, layer_tensor(l, "Uz"));
        auto gUr = view(grad, layer_tensor(l, "Ur"));
        auto gUh = view(grad, layer_tensor(l, "Uh"));
        auto gbz = view(grad, layer_tensor(l, "bz"));
        auto gbr = view(grad, layer_tensor(l, "br"));
        auto gbh = view(grad, layer_tensor(l, "bh"));

        const auto& steps = cache.layers[l];
        std::vector<Mat> d_in(l > 0 ? T : 0);
        Mat dh_next = Mat::Zero(d, B);
        for (std::size_t ti = T; ti-- > 0;) {
            const auto& s = steps[ti];
            Mat dh = d_seq[ti] + dh_next;
            Mat dz = dh.cwiseProduct(s.n - s.h_prev);
            Mat dn = dh.cwiseProduct(s.z);
            Mat dh_prev = dh - dh.cwiseProduct(s.z);
            Mat dan = dn.array() * (1.0 - s.n.array().square());
            Mat drh = Uh.transpose() * dan;
            Mat dr = drh.cwiseProduct(s.h_prev);
            dh_prev += drh.cwiseProduct(s.r);
            Mat daz = dz.array() * s.z.array() * (1.0 - s.z.array());
            Mat dar = dr.array() * s.r.array() * (1.0 - s.r.array());
            dh_prev.noalias() += Uz.transpose() * daz + Ur.transpose() * dar;

            gWz.noalias() += daz * s.x.transpose();
            gWr.noalias() += dar * s.x.transpose();
            gWh.noalias() += dan * s.x.transpose();
            gUz.noalias() += daz * s.h_prev.transpose();
            gUr.noalias() += dar * s.h_prev.transpose();
            gUh.noalias() += dan * s.rh.transpose();
            gbz += daz.rowwise().sum();
            gbr += dar.rowwise().sum();
            gbh += dan.rowwise().sum();
            if (l > 0) d_in[ti] = Wz.transpose() * daz + Wr.transpose() * dar + Wh.transpose() * dan;
            dh_next = std::move(dh_prev);
        }
        if (l > 0) d_seq = std::move(d_in);
    }
}

RMatrix GruModel::forward_window(const RMatrix& window) const {
    if (window.rows() != cfg_.window || window.cols() != cfg_.input_dim)
        throw ValidationError("window", "expected " + std::to_string(cfg_.window) + " x " +
                                            std::to_string(cfg_.input_dim) + " window, got " +
                                            std::to_string(window.rows()) + " x " + std::to_string(window.cols()));
    std::vector<Mat> xs(window.rows());
    for (Eigen::Index t = 0; t < window.rows(); ++t) xs[t] = window.row(t).transpose();
    const Mat y = forward(xs);
    RMatrix out(cfg_.horizon, cfg_.input_dim);
    for (int h = 0; h < cfg_.horizon; ++h)
        for (int j = 0; j < cfg_.input_dim; ++j) out(h, j) = y(h * cfg_.input_dim + j, 0);
    return out;
}

}  // namespace afdmisac

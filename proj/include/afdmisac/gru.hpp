// gru.hpp - multi-layer GRU sequence regressor with full backprop-through-time.
//
// Per layer and step:
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wh x + Uh (r o h) + bh)
//   h' = (1 - z) o h + z o n
// The last top-layer state goes through a linear projection (d -> d') and a
// linear head (d' -> H * 5K). With `residual` set, the last input frame is
// added to every horizon block so the head learns per-frame increments.
//
// All weights live in one flat parameter vector; named tensors are views into
// it, which keeps the optimizer, gradient checks and checkpoints uniform.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "afdmisac/common.hpp"
#include "afdmisac/dd_linsys.hpp"

namespace afdmisac {

using Mat = Eigen::MatrixXd;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

struct GruConfig {
    int input_dim = 15;   // 5K
    int hidden = 32;      // d
    int layers = 2;
    int proj = 16;        // d'
    int horizon = 1;      // H
    int window = 64;      // L
    bool residual = true;

    int output_dim() const { return horizon * input_dim; }
    void validate() const;
    bool operator==(const GruConfig&) const = default;
};

struct TensorSpec {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;
    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Activations kept for the backward pass.
struct GruCache {
    struct Step {
        Mat x, z, r, n, h_prev, rh;
    };
    std::vector<std::vector<Step>> layers;  // [layer][t]
    std::vector<Mat> inputs;                // [t] (in x B)
    Mat h_last;                             // top layer, d x B
    Mat proj;                               // d' x B
};

class GruModel {
public:
    GruModel() = default;
    explicit GruModel(const GruConfig& cfg);

    const GruConfig& config() const { return cfg_; }
    const std::vector<TensorSpec>& tensors() const { return specs_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    MatMap tensor(const std::string& name);
    ConstMatMap tensor(const std::string& name) const;
    /// View of `name` inside an arbitrary flat buffer laid out like params().
    MatMap view(std::vector<double>& buf, const std::string& name) const;

    /// PyTorch-style uniform(-1/sqrt(d), 1/sqrt(d)) initialization.
    void init_uniform(Rng& rng);
    void set_zero();
    bool finite() const;

    /// Batched forward: `inputs` holds L matrices of shape (input_dim x B). Returns (output_dim x B).
    Mat forward(std::span<const Mat> inputs, GruCache* cache = nullptr) const;

    /// Accumulates d(loss)/d(params) into `grad` (same layout as params()) given d(loss)/d(output).
    void backward(const GruCache& cache, const Mat& d_out, std::vector<double>& grad) const;

    /// Single-window convenience: window is L x input_dim (row t = frame t). Returns H x input_dim.
    RMatrix forward_window(const RMatrix& window) const;

private:
    const TensorSpec& spec(const std::string& name) const;

    GruConfig cfg_;
    std::vector<TensorSpec> specs_;
    std::vector<double> params_;
};

/// Name of a per-layer tensor, e.g. layer_tensor(0, "Wz") == "l0.Wz".
std::string layer_tensor(int layer, const char* name);

}  // namespace afdmisac

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "freeinit/sampler.hpp"
#include "freeinit/tensor.hpp"

namespace freeinit {

struct DenoiserConfig {
    Index frames = 8;
    Index channels = 1;
    Index height = 32;
    Index width = 32;
    int hidden = 32;
    int time_embed_dim = 32;
    int n_classes = 4;
    int res_blocks = 2;
    std::uint64_t seed = 0;

    Shape shape() const { return {frames, channels, height, width}; }
    void validate() const;
    friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

nlohmann::json to_json(const DenoiserConfig& c);
DenoiserConfig denoiser_config_from_json(const nlohmann::json& j);

/// Named slice of the flat parameter vector.
struct ParamInfo {
    std::string name;
    Index rows = 0;
    Index cols = 0;
    Index offset = 0;

    Index size() const { return rows * cols; }
};

/// One training example: noisy input, timestep, class label (kUnconditional
/// for the null class) and the noise that produced the input.
struct TrainExample {
    VideoTensor noisy;
    int t = 1;
    int cond = kUnconditional;
    VideoTensor target;
};

/// Small epsilon-prediction network.
///
/// Per frame: a 3x3 stem at full resolution, a stride-2 3x3 convolution to
/// half resolution, `res_blocks` residual blocks (two 3x3 convolutions each)
/// with one temporal kernel-3 convolution after the first block, then
/// nearest upsampling, a skip from the stem and a zero-initialized 3x3 head.
/// Spatial convolutions wrap around (torus); the temporal one zero-pads.
/// Timestep (sinusoidal + 2-layer MLP) and class embeddings are added to the
/// stem and to the input of every residual block.
///
/// All parameters live in one contiguous vector, so the optimizer and the
/// gradient check treat the model as a flat parameter array.
template <typename Scalar>
class ToyDenoiser : public EpsModel {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    explicit ToyDenoiser(const DenoiserConfig& config);

    const DenoiserConfig& config() const { return config_; }
    const std::vector<ParamInfo>& layout() const { return layout_; }
    const ParamInfo& param(const std::string& name) const;

    Vector& parameters() { return params_; }
    const Vector& parameters() const { return params_; }
    Index parameter_count() const { return params_.size(); }

    /// Predicted noise for one video. Throws ShapeError if `z_t` does not
    /// have the configured shape.
    VideoTensor predict(const VideoTensor& z_t, int t, int cond) const override;

    /// Both guidance branches as one batch of two.
    std::pair<VideoTensor, VideoTensor> predict_guided(const VideoTensor& z_t, int t,
                                                       int cond) const override;

    /// Predictions for several inputs evaluated as one batch.
    std::vector<VideoTensor> predict_batch(const std::vector<const VideoTensor*>& inputs,
                                           const std::vector<int>& ts,
                                           const std::vector<int>& conds) const;

    /// Mean squared error over all elements of the batch; writes d(loss)/d(params)
    /// into `grad` (resized to parameter_count()).
    Scalar loss_and_gradient(const std::vector<TrainExample>& batch, Vector& grad) const;

    /// Loss only.
    Scalar loss(const std::vector<TrainExample>& batch) const;

    template <typename Other>
    ToyDenoiser<Other> cast() const
    {
        ToyDenoiser<Other> out(config_);
        out.parameters() = params_.template cast<Other>();
        return out;
    }

private:
    struct Forward;

    void build_layout();
    void initialize();
    Forward forward(const std::vector<const VideoTensor*>& inputs, const std::vector<int>& ts,
                    const std::vector<int>& conds) const;

    Eigen::Map<const Matrix> weight(const ParamInfo& p) const
    {
        return {params_.data() + p.offset, p.rows, p.cols};
    }

    DenoiserConfig config_;
    std::vector<ParamInfo> layout_;
    Vector params_;
};

extern template class ToyDenoiser<float>;
extern template class ToyDenoiser<double>;

/// Writes `<stem>.fin` (flat float32 parameters, ndim 1) and
/// `<stem>.json` (layer list, shapes, offsets, config, extra metadata).
void save_weights(const ToyDenoiser<float>& model, const std::filesystem::path& stem,
                  const nlohmann::json& extra = nlohmann::json::object());

/// Throws MissingArtifactError if either file is absent.
ToyDenoiser<float> load_weights(const std::filesystem::path& stem);

} // namespace freeinit

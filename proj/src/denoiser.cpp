// SPDX-License-Identifier: Apache-2.0
#include "freeinit/denoiser.hpp"

#include <cmath>
#include <fstream>

#include "freeinit/tensor_io.hpp"

namespace freeinit {

void DenoiserConfig::validate() const
{
    require_valid(shape());
    if (height % 2 != 0 || width % 2 != 0)
        throw ParameterError("denoiser: height and width must be even");
    if (hidden < 1 || time_embed_dim < 2 || time_embed_dim % 2 != 0)
        throw ParameterError("denoiser: hidden >= 1 and an even time_embed_dim >= 2 required");
    if (n_classes < 0 || res_blocks < 1)
        throw ParameterError("denoiser: n_classes >= 0 and res_blocks >= 1 required");
}

nlohmann::json to_json(const DenoiserConfig& c)
{
    return {{"frames", c.frames},         {"channels", c.channels},
            {"height", c.height},         {"width", c.width},
            {"hidden", c.hidden},         {"time_embed_dim", c.time_embed_dim},
            {"n_classes", c.n_classes},   {"res_blocks", c.res_blocks},
            {"seed", c.seed}};
}

DenoiserConfig denoiser_config_from_json(const nlohmann::json& j)
{
    DenoiserConfig c;
    c.frames = j.at("frames").get<Index>();
    c.channels = j.at("channels").get<Index>();
    c.height = j.at("height").get<Index>();
    c.width = j.at("width").get<Index>();
    c.hidden = j.at("hidden").get<int>();
    c.time_embed_dim = j.at("time_embed_dim").get<int>();
    c.n_classes = j.at("n_classes").get<int>();
    c.res_blocks = j.at("res_blocks").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

namespace {

template <typename M>
M silu(const M& x)
{
    return (x.array() / (1 + (-x.array()).exp())).matrix();
}

// d silu / dx evaluated at x, multiplied into g.
template <typename M>
M silu_backward(const M& x, const M& g)
{
    using S = typename M::Scalar;
    const auto sig = (S(1) / (1 + (-x.array()).exp())).eval();
    return (g.array() * sig * (1 + x.array() * (1 - sig))).matrix();
}

// Circular 3x3 convolution geometry for one image.
struct ConvGeometry {
    Index in_h = 0, in_w = 0, out_h = 0, out_w = 0;

    ConvGeometry(Index h, Index w, Index stride) : in_h(h), in_w(w), out_h(h / stride), out_w(w / stride) {}

    Index in_pixels() const { return in_h * in_w; }
    Index out_pixels() const { return out_h * out_w; }
};

// Moves one kernel tap of one image between the image and its im2col
// column: column[y, x] <-> image[(s*y + ky - 1) mod h, (s*x + kx - 1) mod w].
template <bool Accumulate, typename Scalar>
void shift_tap(const ConvGeometry& g, int ky, int kx, Index stride, Scalar* image, Scalar* column)
{
    const Index w = g.in_w;
    const Index ow = g.out_w;
    auto move = [](Scalar& img, Scalar& col) {
        if constexpr (Accumulate)
            img += col;
        else
            col = img;
    };
    for (Index y = 0; y < g.out_h; ++y) {
        const Index sy = (stride * y + ky - 1 + g.in_h) % g.in_h;
        Scalar* in_row = image + sy * w;
        Scalar* out_row = column + y * ow;
        if (stride == 1) {
            if (kx == 1) {
                for (Index x = 0; x < ow; ++x)
                    move(in_row[x], out_row[x]);
            } else if (kx == 0) {
                move(in_row[w - 1], out_row[0]);
                for (Index x = 1; x < ow; ++x)
                    move(in_row[x - 1], out_row[x]);
            } else {
                for (Index x = 0; x + 1 < ow; ++x)
                    move(in_row[x + 1], out_row[x]);
                move(in_row[0], out_row[ow - 1]);
            }
        } else {
            for (Index x = 0; x < ow; ++x)
                move(in_row[(stride * x + kx - 1 + w) % w], out_row[x]);
        }
    }
}

template <typename Matrix>
Matrix im2col(const Matrix& in, const ConvGeometry& g, Index images)
{
    const Index cin = in.cols();
    const Index stride = g.in_h / g.out_h;
    Matrix col(images * g.out_pixels(), cin * 9);
    for (Index c = 0; c < cin; ++c)
        for (int k = 0; k < 9; ++k) {
            auto* column = col.col(c * 9 + k).data();
            // shift_tap only reads the image when gathering.
            auto* image = const_cast<typename Matrix::Scalar*>(in.col(c).data());
            for (Index img = 0; img < images; ++img)
                shift_tap<false>(g, k / 3, k % 3, stride, image + img * g.in_pixels(),
                                 column + img * g.out_pixels());
        }
    return col;
}

template <typename Matrix>
void col2im_add(const Matrix& dcol, const ConvGeometry& g, Index images, Matrix& din)
{
    const Index cin = din.cols();
    const Index stride = g.in_h / g.out_h;
    for (Index c = 0; c < cin; ++c)
        for (int k = 0; k < 9; ++k) {
            auto* column = const_cast<typename Matrix::Scalar*>(dcol.col(c * 9 + k).data());
            auto* image = din.col(c).data();
            for (Index img = 0; img < images; ++img)
                shift_tap<true>(g, k / 3, k % 3, stride, image + img * g.in_pixels(),
                                column + img * g.out_pixels());
        }
}

// Temporal kernel-3 im2col over rows laid out as (sample, frame, pixel).
template <typename Matrix>
Matrix temporal_im2col(const Matrix& in, Index samples, Index frames, Index pixels)
{
    const Index cin = in.cols();
    Matrix col = Matrix::Zero(in.rows(), cin * 3);
    for (Index c = 0; c < cin; ++c)
        for (Index k = 0; k < 3; ++k)
            for (Index b = 0; b < samples; ++b)
                for (Index f = 0; f < frames; ++f) {
                    const Index sf = f + k - 1;
                    if (sf < 0 || sf >= frames)
                        continue;
                    col.col(c * 3 + k).segment((b * frames + f) * pixels, pixels) =
                        in.col(c).segment((b * frames + sf) * pixels, pixels);
                }
    return col;
}

template <typename Matrix>
void temporal_col2im_add(const Matrix& dcol, Index samples, Index frames, Index pixels,
                         Matrix& din)
{
    const Index cin = din.cols();
    for (Index c = 0; c < cin; ++c)
        for (Index k = 0; k < 3; ++k)
            for (Index b = 0; b < samples; ++b)
                for (Index f = 0; f < frames; ++f) {
                    const Index sf = f + k - 1;
                    if (sf < 0 || sf >= frames)
                        continue;
                    din.col(c).segment((b * frames + sf) * pixels, pixels) +=
                        dcol.col(c * 3 + k).segment((b * frames + f) * pixels, pixels);
                }
}

// Adds column b of `e` (features x samples) to every row of sample b.
template <typename Matrix>
void add_per_sample(Matrix& m, const Matrix& e, Index rows_per_sample)
{
    for (Index b = 0; b < e.cols(); ++b)
        m.middleRows(b * rows_per_sample, rows_per_sample).rowwise() += e.col(b).transpose();
}

template <typename Matrix>
Matrix sum_per_sample(const Matrix& m, Index samples, Index rows_per_sample)
{
    Matrix out(m.cols(), samples);
    for (Index b = 0; b < samples; ++b)
        out.col(b) = m.middleRows(b * rows_per_sample, rows_per_sample).colwise().sum().transpose();
    return out;
}

} // namespace

template <typename Scalar>
struct ToyDenoiser<Scalar>::Forward {
    Index samples = 0;
    std::vector<int> classes;
    Matrix sin_emb;  // E x B
    Matrix a1;       // K x B
    Matrix emb;      // K x B
    Matrix x;        // Nfull x C
    Matrix h0;       // Nfull x K
    std::vector<Matrix> block_in;
    std::vector<Matrix> block_mid;
    Matrix temporal_in;
    Matrix skip;     // Nfull x K
    Matrix out;      // Nfull x C
};

template <typename Scalar>
ToyDenoiser<Scalar>::ToyDenoiser(const DenoiserConfig& config) : config_(config)
{
    config_.validate();
    build_layout();
    initialize();
}

template <typename Scalar>
void ToyDenoiser<Scalar>::build_layout()
{
    const Index k = config_.hidden;
    const Index c = config_.channels;
    Index offset = 0;
    auto add = [&](std::string name, Index rows, Index cols) {
        layout_.push_back({std::move(name), rows, cols, offset});
        offset += rows * cols;
    };
    add("time.w1", k, config_.time_embed_dim);
    add("time.b1", k, 1);
    add("time.w2", k, k);
    add("time.b2", k, 1);
    add("class.embedding", k, config_.n_classes + 1);
    add("stem.w", k, c * 9);
    add("stem.b", k, 1);
    add("down.w", k, k * 9);
    add("down.b", k, 1);
    for (int j = 0; j < config_.res_blocks; ++j) {
        const std::string p = "block" + std::to_string(j) + ".";
        add(p + "proj.w", k, k);
        add(p + "proj.b", k, 1);
        add(p + "conv1.w", k, k * 9);
        add(p + "conv1.b", k, 1);
        add(p + "conv2.w", k, k * 9);
        add(p + "conv2.b", k, 1);
    }
    add("temporal.w", k, k * 3);
    add("temporal.b", k, 1);
    add("head.w", c, k * 9);
    add("head.b", c, 1);
    params_ = Vector::Zero(offset);
}

template <typename Scalar>
const ParamInfo& ToyDenoiser<Scalar>::param(const std::string& name) const
{
    for (const auto& p : layout_)
        if (p.name == name)
            return p;
    throw ParameterError("denoiser: no parameter named " + name);
}

template <typename Scalar>
void ToyDenoiser<Scalar>::initialize()
{
    RngState rng = RngState(config_.seed).substream("init");
    auto fill_uniform = [&](const ParamInfo& p, double bound) {
        for (Index i = 0; i < p.size(); ++i)
            params_[p.offset + i] = static_cast<Scalar>(bound * (2.0 * rng.uniform() - 1.0));
    };
    auto fan_in = [&](const std::string& weight) { return static_cast<double>(param(weight).cols); };

    for (const auto& p : layout_) {
        if (p.name.starts_with("head."))
            continue;  // zero output head
        if (p.name == "class.embedding") {
            for (Index i = 0; i < p.size(); ++i)
                params_[p.offset + i] = static_cast<Scalar>(rng.normal());
            continue;
        }
        const bool is_bias = p.name.ends_with(".b") || p.name.ends_with(".b1") ||
                             p.name.ends_with(".b2");
        std::string weight = p.name;
        if (is_bias) {
            const auto dot = weight.rfind('.');
            const std::string suffix = weight.substr(dot + 1);
            weight = weight.substr(0, dot + 1) + (suffix == "b" ? "w" : "w" + suffix.substr(1));
        }
        fill_uniform(p, 1.0 / std::sqrt(fan_in(weight)));
    }
}

template <typename Scalar>
typename ToyDenoiser<Scalar>::Forward
ToyDenoiser<Scalar>::forward(const std::vector<const VideoTensor*>& inputs,
                             const std::vector<int>& ts, const std::vector<int>& conds) const
{
    const Shape shape = config_.shape();
    const Index B = static_cast<Index>(inputs.size());
    if (B == 0 || ts.size() != inputs.size() || conds.size() != inputs.size())
        throw ParameterError("denoiser: batch arrays must be non-empty and equally sized");

    const Index F = shape.frames, C = shape.channels, H = shape.height, W = shape.width;
    const Index full_px = H * W;
    const Index low_px = (H / 2) * (W / 2);
    const Index E = config_.time_embed_dim;

    Forward fw;
    fw.samples = B;

    // Embeddings.
    fw.sin_emb.resize(E, B);
    fw.classes.resize(static_cast<std::size_t>(B));
    for (Index b = 0; b < B; ++b) {
        const double t = static_cast<double>(ts[static_cast<std::size_t>(b)]);
        for (Index i = 0; i < E / 2; ++i) {
            const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                         static_cast<double>(E / 2));
            fw.sin_emb(i, b) = static_cast<Scalar>(std::sin(t * freq));
            fw.sin_emb(i + E / 2, b) = static_cast<Scalar>(std::cos(t * freq));
        }
        const int cond = conds[static_cast<std::size_t>(b)];
        if (cond != kUnconditional && (cond < 0 || cond >= config_.n_classes))
            throw ParameterError("denoiser: class label " + std::to_string(cond) +
                                 " out of range");
        fw.classes[static_cast<std::size_t>(b)] =
            cond == kUnconditional ? config_.n_classes : cond;
    }
    fw.a1 = weight(param("time.w1")) * fw.sin_emb;
    fw.a1.colwise() += weight(param("time.b1")).col(0);
    fw.emb = weight(param("time.w2")) * silu(fw.a1);
    fw.emb.colwise() += weight(param("time.b2")).col(0);
    const auto class_table = weight(param("class.embedding"));
    for (Index b = 0; b < B; ++b)
        fw.emb.col(b) += class_table.col(fw.classes[static_cast<std::size_t>(b)]);

    // Input to (pixels x channels).
    fw.x.resize(B * F * full_px, C);
    for (Index b = 0; b < B; ++b) {
        const VideoTensor& v = *inputs[static_cast<std::size_t>(b)];
        require_same_shape(v.shape(), shape, "denoiser input");
        for (Index f = 0; f < F; ++f)
            for (Index c = 0; c < C; ++c)
                for (Index p = 0; p < full_px; ++p)
                    fw.x((b * F + f) * full_px + p, c) =
                        static_cast<Scalar>(v.values()[(f * C + c) * full_px + p]);
    }

    const ConvGeometry full(H, W, 1);
    const ConvGeometry down(H, W, 2);
    const ConvGeometry low(H / 2, W / 2, 1);
    const Index images = B * F;

    auto conv = [&](const Matrix& in, const ConvGeometry& g, const std::string& name) {
        Matrix out = im2col(in, g, images) * weight(param(name + ".w")).transpose();
        out.rowwise() += weight(param(name + ".b")).col(0).transpose();
        return out;
    };

    fw.h0 = conv(fw.x, full, "stem");
    add_per_sample(fw.h0, fw.emb, F * full_px);

    Matrix d = conv(silu(fw.h0), down, "down");
    for (int j = 0; j < config_.res_blocks; ++j) {
        const std::string p = "block" + std::to_string(j);
        Matrix proj = weight(param(p + ".proj.w")) * fw.emb;
        proj.colwise() += weight(param(p + ".proj.b")).col(0);
        add_per_sample(d, proj, F * low_px);
        fw.block_in.push_back(d);
        Matrix mid = conv(silu(d), low, p + ".conv1");
        d += conv(silu(mid), low, p + ".conv2");
        fw.block_mid.push_back(std::move(mid));

        if (j == 0) {
            fw.temporal_in = d;
            Matrix tcol = temporal_im2col(Matrix(silu(d)), B, F, low_px);
            Matrix tout = tcol * weight(param("temporal.w")).transpose();
            tout.rowwise() += weight(param("temporal.b")).col(0).transpose();
            d += tout;
        }
    }

    // Nearest upsample and skip.
    fw.skip = fw.h0;
    const Index hw = W / 2;
    for (Index c = 0; c < d.cols(); ++c)
        for (Index img = 0; img < images; ++img)
            for (Index y = 0; y < H; ++y)
                for (Index x = 0; x < W; ++x)
                    fw.skip(img * full_px + y * W + x, c) += d(img * low_px + (y / 2) * hw + x / 2, c);

    fw.out = conv(silu(fw.skip), full, "head");
    return fw;
}

template <typename Scalar>
VideoTensor ToyDenoiser<Scalar>::predict(const VideoTensor& z_t, int t, int cond) const
{
    return predict_batch({&z_t}, {t}, {cond}).front();
}

template <typename Scalar>
std::pair<VideoTensor, VideoTensor> ToyDenoiser<Scalar>::predict_guided(const VideoTensor& z_t,
                                                                       int t, int cond) const
{
    auto out = predict_batch({&z_t, &z_t}, {t, t}, {kUnconditional, cond});
    return {std::move(out[0]), std::move(out[1])};
}

template <typename Scalar>
std::vector<VideoTensor> ToyDenoiser<Scalar>::predict_batch(
    const std::vector<const VideoTensor*>& inputs, const std::vector<int>& ts,
    const std::vector<int>& conds) const
{
    const Forward fw = forward(inputs, ts, conds);
    const Shape shape = config_.shape();
    const Index F = shape.frames, C = shape.channels, px = shape.height * shape.width;
    std::vector<VideoTensor> out;
    for (Index b = 0; b < fw.samples; ++b) {
        VideoTensor v(shape);
        for (Index f = 0; f < F; ++f)
            for (Index c = 0; c < C; ++c)
                for (Index p = 0; p < px; ++p)
                    v.values()[(f * C + c) * px + p] =
                        static_cast<float>(fw.out((b * F + f) * px + p, c));
        out.push_back(std::move(v));
    }
    return out;
}

namespace {

template <typename Matrix>
Matrix targets_matrix(const std::vector<TrainExample>& batch, const Shape& shape)
{
    const Index F = shape.frames, C = shape.channels, px = shape.height * shape.width;
    const Index B = static_cast<Index>(batch.size());
    Matrix y(B * F * px, C);
    for (Index b = 0; b < B; ++b) {
        const VideoTensor& v = batch[static_cast<std::size_t>(b)].target;
        require_same_shape(v.shape(), shape, "denoiser target");
        for (Index f = 0; f < F; ++f)
            for (Index c = 0; c < C; ++c)
                for (Index p = 0; p < px; ++p)
                    y((b * F + f) * px + p, c) =
                        static_cast<typename Matrix::Scalar>(v.values()[(f * C + c) * px + p]);
    }
    return y;
}

void unpack_batch(const std::vector<TrainExample>& batch, std::vector<const VideoTensor*>& inputs,
                  std::vector<int>& ts, std::vector<int>& conds)
{
    for (const auto& ex : batch) {
        inputs.push_back(&ex.noisy);
        ts.push_back(ex.t);
        conds.push_back(ex.cond);
    }
}

} // namespace

template <typename Scalar>
Scalar ToyDenoiser<Scalar>::loss(const std::vector<TrainExample>& batch) const
{
    std::vector<const VideoTensor*> inputs;
    std::vector<int> ts, conds;
    unpack_batch(batch, inputs, ts, conds);
    const Forward fw = forward(inputs, ts, conds);
    const Matrix y = targets_matrix<Matrix>(batch, config_.shape());
    return (fw.out - y).squaredNorm() / static_cast<Scalar>(y.size());
}

template <typename Scalar>
Scalar ToyDenoiser<Scalar>::loss_and_gradient(const std::vector<TrainExample>& batch,
                                              Vector& grad) const
{
    std::vector<const VideoTensor*> inputs;
    std::vector<int> ts, conds;
    unpack_batch(batch, inputs, ts, conds);
    const Forward fw = forward(inputs, ts, conds);
    const Matrix y = targets_matrix<Matrix>(batch, config_.shape());
    const Matrix diff = fw.out - y;
    const Scalar loss_value = diff.squaredNorm() / static_cast<Scalar>(y.size());

    grad = Vector::Zero(params_.size());
    auto g = [&](const std::string& name) {
        const ParamInfo& p = param(name);
        return Eigen::Map<Matrix>(grad.data() + p.offset, p.rows, p.cols);
    };

    const Shape shape = config_.shape();
    const Index B = fw.samples;
    const Index F = shape.frames, H = shape.height, W = shape.width;
    const Index full_px = H * W;
    const Index low_px = (H / 2) * (W / 2);
    const Index images = B * F;
    const ConvGeometry full(H, W, 1);
    const ConvGeometry down(H, W, 2);
    const ConvGeometry low(H / 2, W / 2, 1);

    // Backward through a conv whose input was `in`; returns d(in).
    auto conv_backward = [&](const Matrix& in, const ConvGeometry& geo, const std::string& name,
                             const Matrix& dout, bool need_input_grad) {
        const Matrix col = im2col(in, geo, images);
        g(name + ".w").noalias() += dout.transpose() * col;
        g(name + ".b").col(0) += dout.colwise().sum().transpose();
        Matrix din;
        if (need_input_grad) {
            const Matrix dcol = dout * weight(param(name + ".w"));
            din = Matrix::Zero(in.rows(), in.cols());
            col2im_add(dcol, geo, images, din);
        }
        return din;
    };

    const Matrix dout = diff * (Scalar(2) / static_cast<Scalar>(y.size()));

    // Head.
    Matrix dskip = silu_backward(fw.skip, conv_backward(silu(fw.skip), full, "head", dout, true));
    Matrix dh0 = dskip;

    // Upsample: sum the four children.
    const Index hw = W / 2;
    Matrix dd = Matrix::Zero(images * low_px, dskip.cols());
    for (Index c = 0; c < dskip.cols(); ++c)
        for (Index img = 0; img < images; ++img)
            for (Index yy = 0; yy < H; ++yy)
                for (Index xx = 0; xx < W; ++xx)
                    dd(img * low_px + (yy / 2) * hw + xx / 2, c) += dskip(img * full_px + yy * W + xx, c);

    Matrix demb = Matrix::Zero(config_.hidden, B);
    for (int j = config_.res_blocks - 1; j >= 0; --j) {
        const std::string p = "block" + std::to_string(j);
        if (j == 0) {
            const Matrix act = silu(fw.temporal_in);
            const Matrix tcol = temporal_im2col(act, B, F, low_px);
            g("temporal.w").noalias() += dd.transpose() * tcol;
            g("temporal.b").col(0) += dd.colwise().sum().transpose();
            const Matrix dtcol = dd * weight(param("temporal.w"));
            Matrix dact = Matrix::Zero(act.rows(), act.cols());
            temporal_col2im_add(dtcol, B, F, low_px, dact);
            dd += silu_backward(fw.temporal_in, dact);
        }
        const Matrix& din = fw.block_in[static_cast<std::size_t>(j)];
        const Matrix& mid = fw.block_mid[static_cast<std::size_t>(j)];
        // d = din + conv2(silu(conv1(silu(din))))
        const Matrix dmid =
            silu_backward(mid, conv_backward(silu(mid), low, p + ".conv2", dd, true));
        dd += silu_backward(din, conv_backward(silu(din), low, p + ".conv1", dmid, true));
        // din = d_prev + proj(emb)
        const Matrix dproj = sum_per_sample(dd, B, F * low_px);
        g(p + ".proj.w").noalias() += dproj * fw.emb.transpose();
        g(p + ".proj.b").col(0) += dproj.rowwise().sum();
        demb.noalias() += weight(param(p + ".proj.w")).transpose() * dproj;
    }

    dh0 += silu_backward(fw.h0, conv_backward(silu(fw.h0), down, "down", dd, true));
    conv_backward(fw.x, full, "stem", dh0, false);
    demb += sum_per_sample(dh0, B, F * full_px);

    // Embedding MLP and class table.
    const Matrix act1 = silu(fw.a1);
    g("time.w2").noalias() += demb * act1.transpose();
    g("time.b2").col(0) += demb.rowwise().sum();
    auto dclass = g("class.embedding");
    for (Index b = 0; b < B; ++b)
        dclass.col(fw.classes[static_cast<std::size_t>(b)]) += demb.col(b);
    const Matrix da1 = silu_backward(fw.a1, Matrix(weight(param("time.w2")).transpose() * demb));
    g("time.w1").noalias() += da1 * fw.sin_emb.transpose();
    g("time.b1").col(0) += da1.rowwise().sum();

    return loss_value;
}

template class ToyDenoiser<float>;
template class ToyDenoiser<double>;

void save_weights(const ToyDenoiser<float>& model, const std::filesystem::path& stem,
                  const nlohmann::json& extra)
{
    RawTensor raw;
    raw.dims = {static_cast<std::uint64_t>(model.parameter_count())};
    raw.values.assign(model.parameters().data(),
                      model.parameters().data() + model.parameter_count());
    std::filesystem::path fin = stem;
    fin += ".fin";
    save_raw_tensor(raw, fin);

    nlohmann::json layers = nlohmann::json::array();
    for (const auto& p : model.layout())
        layers.push_back({{"name", p.name}, {"shape", {p.rows, p.cols}}, {"offset", p.offset}});
    nlohmann::json manifest = {{"format", "freeinit-weights"},
                               {"schema", 1},
                               {"parameter_count", model.parameter_count()},
                               {"model", to_json(model.config())},
                               {"layers", layers},
                               {"metadata", extra}};
    std::filesystem::path json_path = stem;
    json_path += ".json";
    std::ofstream out(json_path, std::ios::trunc);
    if (!out)
        throw Error("cannot write " + json_path.string());
    out << manifest.dump(2) << '\n';
}

ToyDenoiser<float> load_weights(const std::filesystem::path& stem)
{
    std::filesystem::path fin = stem;
    fin += ".fin";
    std::filesystem::path json_path = stem;
    json_path += ".json";
    if (!std::filesystem::exists(fin) || !std::filesystem::exists(json_path))
        throw MissingArtifactError("missing weights: " + fin.string() + " / " +
                                   json_path.string());

    std::ifstream in(json_path);
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(json_path.string() + ": " + e.what());
    }
    ToyDenoiser<float> model(denoiser_config_from_json(manifest.at("model")));
    const RawTensor raw = load_raw_tensor(fin);
    if (raw.dims.size() != 1 || static_cast<Index>(raw.values.size()) != model.parameter_count())
        throw FormatError(fin.string() + ": dims: parameter count " +
                          std::to_string(raw.values.size()) + " does not match architecture (" +
                          std::to_string(model.parameter_count()) + ")");
    model.parameters() = Eigen::Map<const Eigen::VectorXf>(raw.values.data(), model.parameter_count());
    return model;
}

} // namespace freeinit

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lapsecount/layers.hpp"
#include "lapsecount/temporal.hpp"
#include "lapsecount/tensor.hpp"

namespace lapsecount::rnn {

/// One LSTM layer: per-gate input weights W (h x in), recurrent weights
/// U (h x h), biases b (h). Gates follow the standard formulation without
/// peepholes; the forget bias initializes to 1.
struct LstmLayerParams {
    std::size_t in = 0, h = 0;
    Param Wi, Wf, Wo, Wg, Ui, Uf, Uo, Ug, bi, bf, bo, bg;

    LstmLayerParams() = default;
    LstmLayerParams(const std::string& prefix, std::size_t in_dim, std::size_t hidden)
        : in(in_dim),
          h(hidden),
          Wi(prefix + ".Wi", {hidden, in_dim}),
          Wf(prefix + ".Wf", {hidden, in_dim}),
          Wo(prefix + ".Wo", {hidden, in_dim}),
          Wg(prefix + ".Wg", {hidden, in_dim}),
          Ui(prefix + ".Ui", {hidden, hidden}),
          Uf(prefix + ".Uf", {hidden, hidden}),
          Uo(prefix + ".Uo", {hidden, hidden}),
          Ug(prefix + ".Ug", {hidden, hidden}),
          bi(prefix + ".bi", {hidden}),
          bf(prefix + ".bf", {hidden}),
          bo(prefix + ".bo", {hidden}),
          bg(prefix + ".bg", {hidden}) {}

    void init(Rng& rng) {
        for (Param* w : {&Wi, &Wf, &Wo, &Wg}) w->init_glorot(rng, in, h);
        for (Param* u : {&Ui, &Uf, &Uo, &Ug}) u->init_glorot(rng, h, h);
        for (Param* b : {&bi, &bo, &bg}) b->fill(0.0);
        bf.fill(1.0);
    }

    void collect(ParamList& out) {
        for (Param* p : {&Wi, &Wf, &Wo, &Wg, &Ui, &Uf, &Uo, &Ug, &bi, &bf, &bo, &bg})
            out.push_back({p});
    }
};

namespace detail {

inline void matvec_add(const Tensor& W, std::span<const double> x, std::span<double> out) {
    const std::size_t rows = W.shape[0], cols = W.shape[1];
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = W.data.data() + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        out[r] += acc;
    }
}

/// out += W^T v, used for gradient flow to inputs / previous hidden state.
inline void matvec_t_add(const Tensor& W, std::span<const double> v, std::span<double> out) {
    const std::size_t rows = W.shape[0], cols = W.shape[1];
    for (std::size_t r = 0; r < rows; ++r) {
        const double vr = v[r];
        if (vr == 0.0) continue;
        const double* wr = W.data.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) out[c] += wr[c] * vr;
    }
}

/// dW += v x^T (outer product accumulate).
inline void outer_add(Tensor& dW, std::span<const double> v, std::span<const double> x) {
    const std::size_t rows = dW.shape[0], cols = dW.shape[1];
    for (std::size_t r = 0; r < rows; ++r) {
        const double vr = v[r];
        if (vr == 0.0) continue;
        double* wr = dW.data.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) wr[c] += vr * x[c];
    }
}

}  // namespace detail

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;
};

/// Everything the backward pass needs from one forward step.
struct LstmStepCache {
    std::vector<double> x, h_prev, c_prev, i, f, o, g, c, tanh_c, h;
};

/// i = sig(Wi x + Ui h_prev + bi), f/o likewise, g = tanh(Wg x + Ug h_prev + bg),
/// c = f*c_prev + i*g, h = o*tanh(c).
inline void lstm_step(std::span<const double> x, const LstmState& prev,
                      const LstmLayerParams& p, LstmState& next, LstmStepCache* cache = nullptr) {
    if (x.size() != p.in || prev.h.size() != p.h || prev.c.size() != p.h)
        throw std::invalid_argument("lstm_step: shape mismatch");
    const std::size_t h = p.h;
    std::vector<double> ai(p.bi.value.data), af(p.bf.value.data), ao(p.bo.value.data),
        ag(p.bg.value.data);
    detail::matvec_add(p.Wi.value, x, ai);
    detail::matvec_add(p.Ui.value, prev.h, ai);
    detail::matvec_add(p.Wf.value, x, af);
    detail::matvec_add(p.Uf.value, prev.h, af);
    detail::matvec_add(p.Wo.value, x, ao);
    detail::matvec_add(p.Uo.value, prev.h, ao);
    detail::matvec_add(p.Wg.value, x, ag);
    detail::matvec_add(p.Ug.value, prev.h, ag);

    next.h.resize(h);
    next.c.resize(h);
    std::vector<double> iv(h), fv(h), ov(h), gv(h), tc(h);
    for (std::size_t j = 0; j < h; ++j) {
        iv[j] = nn::sigmoid(ai[j]);
        fv[j] = nn::sigmoid(af[j]);
        ov[j] = nn::sigmoid(ao[j]);
        gv[j] = std::tanh(ag[j]);
        next.c[j] = fv[j] * prev.c[j] + iv[j] * gv[j];
        tc[j] = std::tanh(next.c[j]);
        next.h[j] = ov[j] * tc[j];
    }
    if (cache) {
        cache->x.assign(x.begin(), x.end());
        cache->h_prev = prev.h;
        cache->c_prev = prev.c;
        cache->i = std::move(iv);
        cache->f = std::move(fv);
        cache->o = std::move(ov);
        cache->g = std::move(gv);
        cache->c = next.c;
        cache->tanh_c = std::move(tc);
        cache->h = next.h;
    }
}

/// Full-sequence BPTT for one layer. dh_ext[t] is the externally injected
/// hidden-state gradient at step t (empty vector = zero). When dx_out is
/// given, input gradients per step are written there.
inline void lstm_layer_backward(LstmLayerParams& p, const std::vector<LstmStepCache>& steps,
                                const std::vector<std::vector<double>>& dh_ext,
                                std::vector<std::vector<double>>* dx_out) {
    const std::size_t h = p.h;
    std::vector<double> dh_carry(h, 0.0), dc_carry(h, 0.0);
    std::vector<double> dai(h), daf(h), dao(h), dag(h);
    if (dx_out) dx_out->assign(steps.size(), {});

    for (std::size_t ti = steps.size(); ti-- > 0;) {
        const LstmStepCache& s = steps[ti];
        std::vector<double> dh = dh_carry;
        if (!dh_ext[ti].empty())
            for (std::size_t j = 0; j < h; ++j) dh[j] += dh_ext[ti][j];

        for (std::size_t j = 0; j < h; ++j) {
            const double do_j = dh[j] * s.tanh_c[j];
            const double dc_j = dc_carry[j] + dh[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
            const double di_j = dc_j * s.g[j];
            const double dg_j = dc_j * s.i[j];
            const double df_j = dc_j * s.c_prev[j];
            dai[j] = di_j * s.i[j] * (1.0 - s.i[j]);
            daf[j] = df_j * s.f[j] * (1.0 - s.f[j]);
            dao[j] = do_j * s.o[j] * (1.0 - s.o[j]);
            dag[j] = dg_j * (1.0 - s.g[j] * s.g[j]);
            dc_carry[j] = dc_j * s.f[j];
        }

        detail::outer_add(p.Wi.grad, dai, s.x);
        detail::outer_add(p.Wf.grad, daf, s.x);
        detail::outer_add(p.Wo.grad, dao, s.x);
        detail::outer_add(p.Wg.grad, dag, s.x);
        detail::outer_add(p.Ui.grad, dai, s.h_prev);
        detail::outer_add(p.Uf.grad, daf, s.h_prev);
        detail::outer_add(p.Uo.grad, dao, s.h_prev);
        detail::outer_add(p.Ug.grad, dag, s.h_prev);
        for (std::size_t j = 0; j < h; ++j) {
            p.bi.grad[j] += dai[j];
            p.bf.grad[j] += daf[j];
            p.bo.grad[j] += dao[j];
            p.bg.grad[j] += dag[j];
        }

        if (dx_out) {
            auto& dx = (*dx_out)[ti];
            dx.assign(p.in, 0.0);
            detail::matvec_t_add(p.Wi.value, dai, dx);
            detail::matvec_t_add(p.Wf.value, daf, dx);
            detail::matvec_t_add(p.Wo.value, dao, dx);
            detail::matvec_t_add(p.Wg.value, dag, dx);
        }
        std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
        detail::matvec_t_add(p.Ui.value, dai, dh_carry);
        detail::matvec_t_add(p.Uf.value, daf, dh_carry);
        detail::matvec_t_add(p.Uo.value, dao, dh_carry);
        detail::matvec_t_add(p.Ug.value, dag, dh_carry);
    }
}

/// Two stacked LSTM layers (no readout): the shared building block of the
/// unidirectional and bidirectional regressors.
struct LstmCore {
    LstmLayerParams l1, l2;

    LstmCore() = default;
    LstmCore(const std::string& prefix, std::size_t input_dim, std::size_t hidden)
        : l1(prefix + ".l1", input_dim, hidden), l2(prefix + ".l2", hidden, hidden) {}

    void init(Rng& rng) {
        l1.init(rng);
        l2.init(rng);
    }

    void collect(ParamList& out) {
        l1.collect(out);
        l2.collect(out);
    }

    struct Cache {
        std::vector<LstmStepCache> steps1, steps2;
    };

    /// Consumes `rows` in the given order (initial h, c = 0 per layer) and
    /// returns the layer-2 hidden state after the final step.
    std::vector<double> forward(const std::vector<std::span<const double>>& rows,
                                Cache* cache) const {
        LstmState s1{std::vector<double>(l1.h, 0.0), std::vector<double>(l1.h, 0.0)};
        LstmState s2{std::vector<double>(l2.h, 0.0), std::vector<double>(l2.h, 0.0)};
        if (cache) {
            cache->steps1.resize(rows.size());
            cache->steps2.resize(rows.size());
        }
        LstmState n1, n2;
        for (std::size_t t = 0; t < rows.size(); ++t) {
            lstm_step(rows[t], s1, l1, n1, cache ? &cache->steps1[t] : nullptr);
            lstm_step(n1.h, s2, l2, n2, cache ? &cache->steps2[t] : nullptr);
            s1 = n1;
            s2 = n2;
        }
        return s2.h;
    }

    /// BPTT from the gradient of the final layer-2 hidden state.
    void backward(const Cache& cache, std::span<const double> dh_final) {
        const std::size_t T = cache.steps2.size();
        std::vector<std::vector<double>> dh2(T);
        dh2[T - 1].assign(dh_final.begin(), dh_final.end());
        std::vector<std::vector<double>> dh1;
        lstm_layer_backward(l2, cache.steps2, dh2, &dh1);
        lstm_layer_backward(l1, cache.steps1, dh1, nullptr);
    }
};

inline std::vector<std::span<const double>> block_rows(const timeflow::TemporalBlock& block,
                                                       bool reversed = false) {
    std::vector<std::span<const double>> rows(block.tw);
    for (std::size_t t = 0; t < block.tw; ++t)
        rows[t] = block.row(reversed ? block.tw - 1 - t : t);
    return rows;
}

// ---------------------------------------------------------------------------
// Many-to-one regressors.
// ---------------------------------------------------------------------------

class LstmStack {
public:
    LstmStack() : LstmStack(32, 30) {}
    LstmStack(std::size_t input_dim, std::size_t hidden)
        : core_("lstm", input_dim, hidden),
          v_w_("readout.w", {1, hidden}),
          v_b_("readout.b", {1}) {}

    void init(Rng& rng) {
        core_.init(rng);
        v_w_.init_glorot(rng, core_.l2.h, 1);
        v_b_.fill(0.0);
    }

    std::size_t input_dim() const { return core_.l1.in; }
    std::size_t hidden() const { return core_.l2.h; }
    std::string arch() const { return "lstm2x" + std::to_string(hidden()); }

    ParamList params() {
        ParamList out;
        core_.collect(out);
        out.push_back({&v_w_});
        out.push_back({&v_b_});
        return out;
    }

    LstmCore& core() { return core_; }
    const LstmCore& core() const { return core_; }
    Param& readout_w() { return v_w_; }
    Param& readout_b() { return v_b_; }

    struct Cache {
        LstmCore::Cache core;
        std::vector<double> h_final;
    };

    /// Feeds rows 1..tw in temporal order; the readout sees only the final
    /// layer-2 state.
    double forward(const timeflow::TemporalBlock& block, Cache* cache = nullptr) const {
        if (block.m != core_.l1.in)
            throw std::invalid_argument("LstmStack: block feature dim != layer-1 input size");
        Cache local;
        Cache& c = cache ? *cache : local;
        c.h_final = core_.forward(block_rows(block), &c.core);
        double y = 0.0;
        nn::dense_forward(v_w_.value, v_b_.value, c.h_final, std::span<double>(&y, 1));
        return y;
    }

    void backward(const Cache& cache, double dpred) {
        std::vector<double> dh(core_.l2.h);
        nn::dense_backward(v_w_.value, cache.h_final, std::span<const double>(&dpred, 1),
                           v_w_.grad, v_b_.grad, dh);
        core_.backward(cache.core, dh);
    }

private:
    LstmCore core_;
    Param v_w_, v_b_;
};

class BiLstmStack {
public:
    BiLstmStack() : BiLstmStack(32, 30) {}
    BiLstmStack(std::size_t input_dim, std::size_t hidden)
        : fwd_("fwd", input_dim, hidden),
          bwd_("bwd", input_dim, hidden),
          v_w_("readout.w", {1, 2 * hidden}),
          v_b_("readout.b", {1}) {}

    void init(Rng& rng) {
        fwd_.init(rng);
        bwd_.init(rng);
        v_w_.init_glorot(rng, 2 * fwd_.l2.h, 1);
        v_b_.fill(0.0);
    }

    std::size_t input_dim() const { return fwd_.l1.in; }
    std::size_t hidden() const { return fwd_.l2.h; }
    std::string arch() const { return "bilstm2x" + std::to_string(hidden()); }

    ParamList params() {
        ParamList out;
        fwd_.collect(out);
        bwd_.collect(out);
        out.push_back({&v_w_});
        out.push_back({&v_b_});
        return out;
    }

    LstmCore& forward_core() { return fwd_; }
    LstmCore& backward_core() { return bwd_; }
    Param& readout_w() { return v_w_; }
    Param& readout_b() { return v_b_; }

    struct Cache {
        LstmCore::Cache fwd, bwd;
        std::vector<double> h_fwd, h_bwd;
    };

    /// Forward core steps rows 1..tw, backward core steps tw..1; the final
    /// hidden states of both directions feed the joint readout.
    double forward(const timeflow::TemporalBlock& block, Cache* cache = nullptr) const {
        if (block.m != fwd_.l1.in)
            throw std::invalid_argument("BiLstmStack: block feature dim != layer-1 input size");
        Cache local;
        Cache& c = cache ? *cache : local;
        c.h_fwd = fwd_.forward(block_rows(block, false), &c.fwd);
        c.h_bwd = bwd_.forward(block_rows(block, true), &c.bwd);
        const std::size_t h = fwd_.l2.h;
        double y = v_b_.value[0];
        for (std::size_t j = 0; j < h; ++j) y += v_w_.value[j] * c.h_fwd[j];
        for (std::size_t j = 0; j < h; ++j) y += v_w_.value[h + j] * c.h_bwd[j];
        return y;
    }

    void backward(const Cache& cache, double dpred) {
        const std::size_t h = fwd_.l2.h;
        std::vector<double> dhf(h), dhb(h);
        for (std::size_t j = 0; j < h; ++j) {
            v_w_.grad[j] += dpred * cache.h_fwd[j];
            v_w_.grad[h + j] += dpred * cache.h_bwd[j];
            dhf[j] = v_w_.value[j] * dpred;
            dhb[j] = v_w_.value[h + j] * dpred;
        }
        v_b_.grad[0] += dpred;
        fwd_.backward(cache.fwd, dhf);
        bwd_.backward(cache.bwd, dhb);
    }

private:
    LstmCore fwd_, bwd_;
    Param v_w_, v_b_;
};

}  // namespace lapsecount::rnn

#include "culab/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "culab/errors.hpp"

namespace culab {

// Flat parameter layout, all matrices row-major [in][out]:
//   embedding   vocab x hidden                     at 0
//   per layer   Wq, Wk, Wv, Wo  (hidden x hidden)  at emb_end + layer*12h^2
//               W1 (hidden x 4 hidden)
//               W2 (4 hidden x hidden)
//   output      hidden x vocab                     at the tail
namespace {

struct offsets {
    int V, P, d, m, L, H, hd;
    std::size_t emb, layer0, per_layer, unemb, total;
};

offsets layout(const model_config& c) {
    offsets o;
    o.V = c.vocab_size;
    o.P = c.context_window;
    o.d = c.hidden_dim;
    o.m = 4 * c.hidden_dim;
    o.L = c.n_layers;
    o.H = n_heads(c);
    o.hd = o.d / o.H;
    o.emb = 0;
    o.layer0 = std::size_t(o.V) * o.d;
    o.per_layer = 12 * std::size_t(o.d) * o.d;
    o.unemb = o.layer0 + std::size_t(o.L) * o.per_layer;
    o.total = o.unemb + std::size_t(o.d) * o.V;
    return o;
}

void check_config(const model_config& c) {
    if (c.vocab_size < 2) throw config_error("vocab_size must be >= 2");
    if (c.context_window < 2) throw config_error("context_window must be >= 2");
    if (c.hidden_dim < 1) throw config_error("hidden_dim must be >= 1");
    if (c.n_layers < 1 || c.n_layers > 8) throw config_error("n_layers must be in [1, 8]");
}

void check_tokens(const model_config& c, const token_seq& seq, const char* what) {
    if (int(seq.size()) > c.context_window)
        throw config_error(std::string(what) + " length " + std::to_string(seq.size()) +
                           " exceeds context_window " + std::to_string(c.context_window));
    for (const token_id t : seq)
        if (t < 0 || t >= c.vocab_size)
            throw config_error(std::string(what) + " holds token id " + std::to_string(t) +
                               " outside the vocabulary");
}

constexpr double kRmsEps = 1e-8;

// y = x / sqrt(mean(x^2) + eps); returns 1/r for the backward pass.
double rms_norm(const double* x, double* y, int n) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) ss += x[i] * x[i];
    const double inv_r = 1.0 / std::sqrt(ss / n + kRmsEps);
    for (int i = 0; i < n; ++i) y[i] = x[i] * inv_r;
    return inv_r;
}

// dx += backward of y = x * inv_r through the norm.
void rms_norm_bwd(const double* dy, const double* x, double inv_r, double* dx, int n) {
    double xdy = 0.0;
    for (int i = 0; i < n; ++i) xdy += x[i] * dy[i];
    const double k = xdy * inv_r * inv_r * inv_r / n;
    for (int i = 0; i < n; ++i) dx[i] += dy[i] * inv_r - x[i] * k;
}

// y[0..out) += x^T W for one input row: y_j += sum_i x_i W[i*out + j]
void mat_acc(const double* W, const double* x, double* y, int in, int out) {
    for (int i = 0; i < in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = W + std::size_t(i) * out;
        for (int j = 0; j < out; ++j) y[j] += xi * row[j];
    }
}

// dx_i += sum_j dy_j W[i*out + j]
void mat_bwd_x(const double* W, const double* dy, double* dx, int in, int out) {
    for (int i = 0; i < in; ++i) {
        const double* row = W + std::size_t(i) * out;
        double acc = 0.0;
        for (int j = 0; j < out; ++j) acc += dy[j] * row[j];
        dx[i] += acc;
    }
}

// dW[i*out + j] += x_i dy_j
void mat_bwd_w(double* dW, const double* x, const double* dy, int in, int out) {
    for (int i = 0; i < in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        double* row = dW + std::size_t(i) * out;
        for (int j = 0; j < out; ++j) row[j] += xi * dy[j];
    }
}

struct layer_cache {
    std::vector<double> h_in, u, inv_u, q, k, v, att, acat, h_mid, u2, inv_u2, pre1, g;
};

struct workspace {
    std::vector<layer_cache> layers;
    std::vector<double> h, f, inv_f, logits, probs;
    std::vector<double> dh, du, dq, dk, dv, dacat, du2, dg, datt, dlogits;

    void prepare(const offsets& o, int n, bool with_probs) {
        const std::size_t nd = std::size_t(n) * o.d;
        const std::size_t nm = std::size_t(n) * o.m;
        layers.resize(std::size_t(o.L));
        for (auto& lc : layers) {
            lc.h_in.resize(nd);
            lc.u.resize(nd);
            lc.inv_u.resize(std::size_t(n));
            lc.q.resize(nd);
            lc.k.resize(nd);
            lc.v.resize(nd);
            lc.att.resize(std::size_t(o.H) * n * n);
            lc.acat.resize(nd);
            lc.h_mid.resize(nd);
            lc.u2.resize(nd);
            lc.inv_u2.resize(std::size_t(n));
            lc.pre1.resize(nm);
            lc.g.resize(nm);
        }
        h.resize(nd);
        f.resize(nd);
        inv_f.resize(std::size_t(n));
        logits.resize(std::size_t(o.V));
        if (with_probs) probs.resize(std::size_t(n) * o.V);
        dh.resize(nd);
        du.resize(std::size_t(o.d));
        dq.resize(nd);
        dk.resize(nd);
        dv.resize(nd);
        dacat.resize(std::size_t(o.d));
        du2.resize(std::size_t(o.d));
        dg.resize(std::size_t(o.m));
        datt.resize(std::size_t(n));
        dlogits.resize(std::size_t(o.V));
    }
};

workspace& scratch() {
    static thread_local workspace ws;
    return ws;
}

// Run the stream over tokens[0..n_proc) and fill every cache needed to
// read logits rows or run the backward pass.
void forward_hidden(const model& m, const offsets& o, const token_id* toks, int n_proc,
                    workspace& ws) {
    const double* P = m.params.data();
    const int d = o.d, mh = o.m, H = o.H, hd = o.hd;
    const double inv_sqrt_hd = 1.0 / std::sqrt(double(hd));

    for (int t = 0; t < n_proc; ++t)
        std::memcpy(ws.h.data() + std::size_t(t) * d, P + o.emb + std::size_t(toks[t]) * d,
                    sizeof(double) * std::size_t(d));

    for (int l = 0; l < o.L; ++l) {
        layer_cache& lc = ws.layers[std::size_t(l)];
        const double* Wq = P + o.layer0 + std::size_t(l) * o.per_layer;
        const double* Wk = Wq + std::size_t(d) * d;
        const double* Wv = Wk + std::size_t(d) * d;
        const double* Wo = Wv + std::size_t(d) * d;
        const double* W1 = Wo + std::size_t(d) * d;
        const double* W2 = W1 + std::size_t(d) * mh;

        std::copy(ws.h.begin(), ws.h.begin() + std::size_t(n_proc) * d, lc.h_in.begin());
        for (int t = 0; t < n_proc; ++t) {
            const std::size_t td = std::size_t(t) * d;
            lc.inv_u[std::size_t(t)] = rms_norm(lc.h_in.data() + td, lc.u.data() + td, d);
            std::fill_n(lc.q.data() + td, d, 0.0);
            std::fill_n(lc.k.data() + td, d, 0.0);
            std::fill_n(lc.v.data() + td, d, 0.0);
            mat_acc(Wq, lc.u.data() + td, lc.q.data() + td, d, d);
            mat_acc(Wk, lc.u.data() + td, lc.k.data() + td, d, d);
            mat_acc(Wv, lc.u.data() + td, lc.v.data() + td, d, d);
        }

        std::fill(lc.acat.begin(), lc.acat.begin() + std::size_t(n_proc) * d, 0.0);
        for (int h = 0; h < H; ++h) {
            const int off = h * hd;
            double* att_h = lc.att.data() + std::size_t(h) * n_proc * n_proc;
            for (int t = 0; t < n_proc; ++t) {
                double* row = att_h + std::size_t(t) * n_proc;
                const double* qt = lc.q.data() + std::size_t(t) * d + off;
                double smax = -1e300;
                for (int j = 0; j <= t; ++j) {
                    const double* kj = lc.k.data() + std::size_t(j) * d + off;
                    double s = 0.0;
                    for (int c = 0; c < hd; ++c) s += qt[c] * kj[c];
                    s *= inv_sqrt_hd;
                    row[j] = s;
                    if (s > smax) smax = s;
                }
                double z = 0.0;
                for (int j = 0; j <= t; ++j) {
                    row[j] = std::exp(row[j] - smax);
                    z += row[j];
                }
                const double inv_z = 1.0 / z;
                double* out = lc.acat.data() + std::size_t(t) * d + off;
                for (int j = 0; j <= t; ++j) {
                    row[j] *= inv_z;
                    const double* vj = lc.v.data() + std::size_t(j) * d + off;
                    const double a = row[j];
                    for (int c = 0; c < hd; ++c) out[c] += a * vj[c];
                }
            }
        }

        for (int t = 0; t < n_proc; ++t) {
            const std::size_t td = std::size_t(t) * d;
            mat_acc(Wo, lc.acat.data() + td, ws.h.data() + td, d, d);
        }
        std::copy(ws.h.begin(), ws.h.begin() + std::size_t(n_proc) * d, lc.h_mid.begin());

        for (int t = 0; t < n_proc; ++t) {
            const std::size_t td = std::size_t(t) * d;
            const std::size_t tm = std::size_t(t) * mh;
            lc.inv_u2[std::size_t(t)] = rms_norm(lc.h_mid.data() + td, lc.u2.data() + td, d);
            std::fill_n(lc.pre1.data() + tm, mh, 0.0);
            mat_acc(W1, lc.u2.data() + td, lc.pre1.data() + tm, d, mh);
            for (int j = 0; j < mh; ++j)
                lc.g[tm + std::size_t(j)] = lc.pre1[tm + std::size_t(j)] > 0.0
                                                ? lc.pre1[tm + std::size_t(j)]
                                                : 0.0;
            mat_acc(W2, lc.g.data() + tm, ws.h.data() + td, mh, d);
        }
    }

    for (int t = 0; t < n_proc; ++t) {
        const std::size_t td = std::size_t(t) * d;
        ws.inv_f[std::size_t(t)] = rms_norm(ws.h.data() + td, ws.f.data() + td, d);
    }
}

// Log-softmax row for position t; fills probs_row (size V) and returns
// log p(target). probs_row may alias ws storage.
double row_logprob(const model& m, const offsets& o, workspace& ws, int t,
                   token_id target, double* probs_row) {
    const double* Wu = m.params.data() + o.unemb;
    double* logits = ws.logits.data();
    std::fill_n(logits, o.V, 0.0);
    mat_acc(Wu, ws.f.data() + std::size_t(t) * o.d, logits, o.d, o.V);
    double lmax = logits[0];
    for (int i = 1; i < o.V; ++i) lmax = std::max(lmax, logits[i]);
    double z = 0.0;
    for (int i = 0; i < o.V; ++i) {
        probs_row[i] = std::exp(logits[i] - lmax);
        z += probs_row[i];
    }
    const double inv_z = 1.0 / z;
    for (int i = 0; i < o.V; ++i) probs_row[i] *= inv_z;
    return logits[target] - lmax - std::log(z);
}

// Weighted-row conditional log-probability with optional gradient
// accumulation: rows row_lo .. n_total-2 each predict toks[row+1].
double fwd_bwd(const model& m, const token_seq& toks, int row_lo, double scale,
               std::vector<double>* grad) {
    const offsets o = layout(m.config);
    const int n_total = int(toks.size());
    const int n_proc = n_total - 1;
    workspace& ws = scratch();
    ws.prepare(o, n_proc, grad != nullptr);

    forward_hidden(m, o, toks.data(), n_proc, ws);

    double logp_sum = 0.0;
    std::vector<double> local_probs(grad ? 0 : std::size_t(o.V));
    for (int t = row_lo; t < n_proc; ++t) {
        double* prow = grad ? ws.probs.data() + std::size_t(t) * o.V : local_probs.data();
        logp_sum += row_logprob(m, o, ws, t, toks[std::size_t(t) + 1], prow);
    }
    if (!grad) return logp_sum;

    double* G = grad->data();
    const double* P = m.params.data();
    const int d = o.d, mh = o.m, H = o.H, hd = o.hd;
    const double inv_sqrt_hd = 1.0 / std::sqrt(double(hd));

    std::fill(ws.dh.begin(), ws.dh.begin() + std::size_t(n_proc) * d, 0.0);

    // Output layer and final norm.
    for (int t = row_lo; t < n_proc; ++t) {
        const std::size_t td = std::size_t(t) * d;
        const double* prow = ws.probs.data() + std::size_t(t) * o.V;
        double* dlog = ws.dlogits.data();
        for (int i = 0; i < o.V; ++i) dlog[i] = -scale * prow[i];
        dlog[toks[std::size_t(t) + 1]] += scale;

        mat_bwd_w(G + o.unemb, ws.f.data() + td, dlog, d, o.V);
        std::fill_n(ws.du.data(), d, 0.0);
        mat_bwd_x(P + o.unemb, dlog, ws.du.data(), d, o.V);
        rms_norm_bwd(ws.du.data(), ws.h.data() + td, ws.inv_f[std::size_t(t)],
                     ws.dh.data() + td, d);
    }

    for (int l = o.L - 1; l >= 0; --l) {
        layer_cache& lc = ws.layers[std::size_t(l)];
        const std::size_t base = o.layer0 + std::size_t(l) * o.per_layer;
        const double* Wq = P + base;
        const double* Wk = Wq + std::size_t(d) * d;
        const double* Wv = Wk + std::size_t(d) * d;
        const double* Wo = Wv + std::size_t(d) * d;
        const double* W1 = Wo + std::size_t(d) * d;
        const double* W2 = W1 + std::size_t(d) * mh;
        double* dWq = G + base;
        double* dWk = dWq + std::size_t(d) * d;
        double* dWv = dWk + std::size_t(d) * d;
        double* dWo = dWv + std::size_t(d) * d;
        double* dW1 = dWo + std::size_t(d) * d;
        double* dW2 = dW1 + std::size_t(d) * mh;

        // Feed-forward half: h = h_mid + relu(rmsnorm(h_mid) W1) W2.
        for (int t = 0; t < n_proc; ++t) {
            const std::size_t td = std::size_t(t) * d;
            const std::size_t tm = std::size_t(t) * mh;
            double* dh_t = ws.dh.data() + td;
            double* dg = ws.dg.data();
            std::fill_n(dg, mh, 0.0);
            mat_bwd_w(dW2, lc.g.data() + tm, dh_t, mh, d);
            mat_bwd_x(W2, dh_t, dg, mh, d);
            for (int j = 0; j < mh; ++j)
                if (lc.pre1[tm + std::size_t(j)] <= 0.0) dg[j] = 0.0;
            mat_bwd_w(dW1, lc.u2.data() + td, dg, d, mh);
            std::fill_n(ws.du2.data(), d, 0.0);
            mat_bwd_x(W1, dg, ws.du2.data(), d, mh);
            rms_norm_bwd(ws.du2.data(), lc.h_mid.data() + td, lc.inv_u2[std::size_t(t)],
                         dh_t, d);
        }

        // Attention half: h_mid = h_in + att(v) Wo.
        std::fill(ws.dq.begin(), ws.dq.begin() + std::size_t(n_proc) * d, 0.0);
        std::fill(ws.dk.begin(), ws.dk.begin() + std::size_t(n_proc) * d, 0.0);
        std::fill(ws.dv.begin(), ws.dv.begin() + std::size_t(n_proc) * d, 0.0);

        for (int t = 0; t < n_proc; ++t) {
            const std::size_t td = std::size_t(t) * d;
            const double* dh_t = ws.dh.data() + td;
            mat_bwd_w(dWo, lc.acat.data() + td, dh_t, d, d);
            std::fill_n(ws.dacat.data(), d, 0.0);
            mat_bwd_x(Wo, dh_t, ws.dacat.data(), d, d);

            for (int h = 0; h < H; ++h) {
                const int off = h * hd;
                const double* att_row =
                    lc.att.data() + (std::size_t(h) * n_proc + std::size_t(t)) * n_proc;
                const double* da = ws.dacat.data() + off;
                double rowdot = 0.0;
                for (int j = 0; j <= t; ++j) {
                    const double* vj = lc.v.data() + std::size_t(j) * d + off;
                    double dd = 0.0;
                    for (int c = 0; c < hd; ++c) dd += da[c] * vj[c];
                    ws.datt[std::size_t(j)] = dd;
                    rowdot += att_row[j] * dd;
                    double* dvj = ws.dv.data() + std::size_t(j) * d + off;
                    const double a = att_row[j];
                    for (int c = 0; c < hd; ++c) dvj[c] += a * da[c];
                }
                double* dqt = ws.dq.data() + td + off;
                const double* qt = lc.q.data() + td + off;
                for (int j = 0; j <= t; ++j) {
                    const double ds = att_row[j] * (ws.datt[std::size_t(j)] - rowdot) *
                                      inv_sqrt_hd;
                    if (ds == 0.0) continue;
                    const double* kj = lc.k.data() + std::size_t(j) * d + off;
                    double* dkj = ws.dk.data() + std::size_t(j) * d + off;
                    for (int c = 0; c < hd; ++c) {
                        dqt[c] += ds * kj[c];
                        dkj[c] += ds * qt[c];
                    }
                }
            }
        }

        for (int t = 0; t < n_proc; ++t) {
            const std::size_t td = std::size_t(t) * d;
            mat_bwd_w(dWq, lc.u.data() + td, ws.dq.data() + td, d, d);
            mat_bwd_w(dWk, lc.u.data() + td, ws.dk.data() + td, d, d);
            mat_bwd_w(dWv, lc.u.data() + td, ws.dv.data() + td, d, d);
            std::fill_n(ws.du.data(), d, 0.0);
            mat_bwd_x(Wq, ws.dq.data() + td, ws.du.data(), d, d);
            mat_bwd_x(Wk, ws.dk.data() + td, ws.du.data(), d, d);
            mat_bwd_x(Wv, ws.dv.data() + td, ws.du.data(), d, d);
            rms_norm_bwd(ws.du.data(), lc.h_in.data() + td, lc.inv_u[std::size_t(t)],
                         ws.dh.data() + td, d);
        }
    }

    for (int t = 0; t < n_proc; ++t) {
        const std::size_t td = std::size_t(t) * d;
        double* drow = G + o.emb + std::size_t(toks[std::size_t(t)]) * d;
        const double* dh_t = ws.dh.data() + td;
        for (int c = 0; c < d; ++c) drow[c] += dh_t[c];
    }
    return logp_sum;
}

} // namespace

std::size_t param_count(const model_config& config) {
    check_config(config);
    return layout(config).total;
}

int n_heads(const model_config& config) {
    if (config.hidden_dim % 4 == 0) return 4;
    if (config.hidden_dim % 2 == 0) return 2;
    return 1;
}

model init_model(const model_config& config) {
    check_config(config);
    model m;
    m.config = config;
    m.params.resize(param_count(config));
    rng gen(config.seed);
    for (auto& p : m.params) p = 0.08 * gen.normal();
    return m;
}

std::vector<double> next_token_dist(const model& m, const token_seq& prefix) {
    if (prefix.empty()) throw config_error("prefix must not be empty");
    check_tokens(m.config, prefix, "prefix");
    const offsets o = layout(m.config);
    workspace& ws = scratch();
    const int n = int(prefix.size());
    ws.prepare(o, n, false);
    forward_hidden(m, o, prefix.data(), n, ws);
    std::vector<double> probs(std::size_t(o.V));
    row_logprob(m, o, ws, n - 1, 0, probs.data());
    return probs;
}

double cond_logprob(const model& m, const token_seq& prefix, const token_seq& continuation) {
    if (prefix.empty()) throw config_error("prefix must not be empty");
    if (continuation.empty()) return 0.0;
    token_seq seq = prefix;
    seq.insert(seq.end(), continuation.begin(), continuation.end());
    check_tokens(m.config, seq, "sequence");
    return fwd_bwd(m, seq, int(prefix.size()) - 1, 1.0, nullptr);
}

double seq_logprob(const model& m, const token_seq& seq) {
    if (seq.size() < 2)
        throw config_error("sequence must hold at least two tokens to be scored");
    check_tokens(m.config, seq, "sequence");
    return fwd_bwd(m, seq, 0, 1.0, nullptr);
}

std::vector<double> grad_cond_logprob(const model& m, const token_seq& prefix,
                                      const token_seq& continuation) {
    std::vector<double> grad(param_count(m.config), 0.0);
    accumulate_grad_cond_logprob(m, prefix, continuation, 1.0, grad);
    return grad;
}

double accumulate_grad_cond_logprob(const model& m, const token_seq& prefix,
                                    const token_seq& continuation, double scale,
                                    std::vector<double>& grad) {
    if (prefix.empty()) throw config_error("prefix must not be empty");
    if (grad.size() != param_count(m.config))
        throw config_error("gradient buffer has wrong size");
    if (continuation.empty()) return 0.0;
    token_seq seq = prefix;
    seq.insert(seq.end(), continuation.begin(), continuation.end());
    check_tokens(m.config, seq, "sequence");
    return fwd_bwd(m, seq, int(prefix.size()) - 1, scale, &grad);
}

token_seq greedy_decode(const model& m, const token_seq& prefix, int max_new,
                        token_id eos_id) {
    if (prefix.empty()) throw config_error("prefix must not be empty");
    check_tokens(m.config, prefix, "prefix");
    token_seq seq = prefix;
    for (int step = 0; step < max_new; ++step) {
        if (int(seq.size()) >= m.config.context_window) break;
        const auto dist = next_token_dist(m, seq);
        token_id best = 0;
        for (token_id i = 1; i < token_id(dist.size()); ++i)
            if (dist[std::size_t(i)] > dist[std::size_t(best)]) best = i;
        seq.push_back(best);
        if (best == eos_id) break;
    }
    return seq;
}

token_seq sample_decode(const model& m, const token_seq& prefix, double temperature,
                        rng& gen, int max_new, token_id eos_id) {
    if (prefix.empty()) throw config_error("prefix must not be empty");
    if (!(temperature > 0.0)) throw config_error("temperature must be > 0");
    check_tokens(m.config, prefix, "prefix");
    token_seq seq = prefix;
    std::vector<double> scaled;
    for (int step = 0; step < max_new; ++step) {
        if (int(seq.size()) >= m.config.context_window) break;
        const auto dist = next_token_dist(m, seq);
        // Re-normalize p^(1/T) through logs with max subtraction.
        scaled.resize(dist.size());
        double lmax = -1e300;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            scaled[i] = std::log(std::max(dist[i], 1e-300)) / temperature;
            lmax = std::max(lmax, scaled[i]);
        }
        double z = 0.0;
        for (auto& s : scaled) {
            s = std::exp(s - lmax);
            z += s;
        }
        for (auto& s : scaled) s /= z;
        const token_id pick = token_id(gen.categorical(scaled));
        seq.push_back(pick);
        if (pick == eos_id) break;
    }
    return seq;
}

double corpus_nll(const model& m, const std::vector<token_seq>& corpus) {
    if (corpus.empty()) throw config_error("corpus must not be empty");
    double logp = 0.0;
    std::size_t tokens = 0;
    for (const auto& seq : corpus) {
        if (seq.size() < 2) throw config_error("corpus sequences need >= 2 tokens");
        check_tokens(m.config, seq, "corpus sequence");
        logp += fwd_bwd(m, seq, 0, 1.0, nullptr);
        tokens += seq.size() - 1;
    }
    return -logp / double(tokens);
}

std::vector<double> finetune(model& m, const std::vector<token_seq>& corpus, int epochs,
                             double learning_rate) {
    if (epochs < 0) throw config_error("epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw config_error("learning_rate must be > 0");
    if (corpus.empty()) throw config_error("corpus must not be empty");
    for (const auto& seq : corpus) {
        if (seq.size() < 2) throw config_error("corpus sequences need >= 2 tokens");
        check_tokens(m.config, seq, "corpus sequence");
    }

    std::vector<double> trace;
    trace.reserve(std::size_t(epochs));
    std::vector<double> grad(param_count(m.config));
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double logp = 0.0;
        std::size_t tokens = 0;
        for (const auto& seq : corpus) {
            logp += fwd_bwd(m, seq, 0, 1.0, &grad);
            tokens += seq.size() - 1;
        }
        const double nll = -logp / double(tokens);
        if (!std::isfinite(nll))
            throw numeric_error("finetune loss turned non-finite at epoch " +
                                std::to_string(epoch));
        trace.push_back(nll);
        const double step = learning_rate / double(tokens);
        for (std::size_t i = 0; i < grad.size(); ++i) m.params[i] += step * grad[i];
    }
    return trace;
}

namespace {
constexpr char kMagic[8] = {'C', 'U', 'L', 'M', '0', '0', '0', '1'};
}

void save_model(const std::string& path, const model& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    const std::int32_t dims[4] = {m.config.vocab_size, m.config.context_window,
                                  m.config.hidden_dim, m.config.n_layers};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    const std::uint64_t seed = m.config.seed;
    out.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
    const std::uint64_t count = m.params.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(m.params.data()),
              std::streamsize(m.params.size() * sizeof(double)));
    if (!out) throw io_error("failed writing '" + path + "'");
}

model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw io_error("'" + path + "' is not a model checkpoint (bad magic)");
    std::int32_t dims[4];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    std::uint64_t seed = 0, count = 0;
    in.read(reinterpret_cast<char*>(&seed), sizeof(seed));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in) throw io_error("'" + path + "' truncated in header");

    model m;
    m.config.vocab_size = dims[0];
    m.config.context_window = dims[1];
    m.config.hidden_dim = dims[2];
    m.config.n_layers = dims[3];
    m.config.seed = seed;
    check_config(m.config);
    if (count != param_count(m.config))
        throw io_error("'" + path + "' parameter count disagrees with its config");
    m.params.resize(count);
    in.read(reinterpret_cast<char*>(m.params.data()),
            std::streamsize(count * sizeof(double)));
    if (!in) throw io_error("'" + path + "' truncated in parameter block");
    for (const double p : m.params)
        if (!std::isfinite(p)) throw io_error("'" + path + "' holds non-finite parameters");
    return m;
}

std::uint64_t params_checksum(const model& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.params.data());
    const std::size_t n = m.params.size() * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace culab

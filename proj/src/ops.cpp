// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

namespace {

using kernels::Index;

// Active tape when at least one input is tracked by it, otherwise null.
Tape* tracking_tape(std::initializer_list<const Tensor*> inputs) {
    Tape* tape = Tape::active();
    if (!tape) return nullptr;
    for (const Tensor* t : inputs) {
        if (t && tape->tracks(*t)) return tape;
    }
    return nullptr;
}

Tape* tracking_tape(std::span<const Tensor> inputs) {
    Tape* tape = Tape::active();
    if (!tape) return nullptr;
    for (const Tensor& t : inputs) {
        if (tape->tracks(t)) return tape;
    }
    return nullptr;
}

void require_rank(const Tensor& t, int rank, const char* op) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(t.dims()));
    }
}

enum class Broadcast { Same, Channel };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
    if (a.dims() == b.dims()) return Broadcast::Same;
    if (a.rank() == 3 && b.rank() == 1 && b.dim(0) == a.dim(0)) return Broadcast::Channel;
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.dims()) + " and " + shape_str(b.dims()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    const Broadcast kind = broadcast_kind(a, b, "add");
    Tensor out(a.dims());
    auto o = out.mutable_data();
    auto av = a.data();
    auto bv = b.data();
    const Index n = a.numel();
    if (kind == Broadcast::Same) {
        for (Index i = 0; i < n; ++i) o[i] = av[i] + bv[i];
    } else {
        const Index C = a.dim(0), HW = a.dim(1) * a.dim(2);
        for (Index c = 0; c < C; ++c) {
            for (Index i = 0; i < HW; ++i) o[c * HW + i] = av[c * HW + i] + bv[c];
        }
    }
    Tape* tape = tracking_tape({&a, &b});
    if (!tape) return out;
    const Shape adims = a.dims();
    return tape->record(std::move(out), {&a, &b}, "add", [kind, adims](std::span<const Real> g, std::span<GradSlot> gi) {
        if (gi[0]) {
            auto& ga = *gi[0];
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (gi[1]) {
            auto& gb = *gi[1];
            if (kind == Broadcast::Same) {
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            } else {
                const Index C = adims[0], HW = adims[1] * adims[2];
                for (Index c = 0; c < C; ++c) {
                    Real s = 0;
                    for (Index i = 0; i < HW; ++i) s += g[c * HW + i];
                    gb[c] += s;
                }
            }
        }
    });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    const Broadcast kind = broadcast_kind(a, b, "hadamard");
    Tensor out(a.dims());
    auto o = out.mutable_data();
    auto av = a.data();
    auto bv = b.data();
    const Index n = a.numel();
    if (kind == Broadcast::Same) {
        for (Index i = 0; i < n; ++i) o[i] = av[i] * bv[i];
    } else {
        const Index C = a.dim(0), HW = a.dim(1) * a.dim(2);
        for (Index c = 0; c < C; ++c) {
            for (Index i = 0; i < HW; ++i) o[c * HW + i] = av[c * HW + i] * bv[c];
        }
    }
    Tape* tape = tracking_tape({&a, &b});
    if (!tape) return out;
    return tape->record(std::move(out), {&a, &b}, "hadamard",
                        [kind, a = a.detached(), b = b.detached()](std::span<const Real> g, std::span<GradSlot> gi) {
                            auto av = a.data();
                            auto bv = b.data();
                            if (kind == Broadcast::Same) {
                                if (gi[0])
                                    for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i] * bv[i];
                                if (gi[1])
                                    for (std::size_t i = 0; i < g.size(); ++i) (*gi[1])[i] += g[i] * av[i];
                                return;
                            }
                            const Index C = a.dim(0), HW = a.dim(1) * a.dim(2);
                            for (Index c = 0; c < C; ++c) {
                                Real s = 0;
                                for (Index i = 0; i < HW; ++i) {
                                    const Index k = c * HW + i;
                                    if (gi[0]) (*gi[0])[k] += g[k] * bv[c];
                                    s += g[k] * av[k];
                                }
                                if (gi[1]) (*gi[1])[c] += s;
                            }
                        });
}

Tensor scale(const Tensor& a, Real factor) {
    Tensor out(a.dims());
    auto o = out.mutable_data();
    auto av = a.data();
    for (Index i = 0; i < a.numel(); ++i) o[i] = av[i] * factor;
    Tape* tape = tracking_tape({&a});
    if (!tape) return out;
    return tape->record(std::move(out), {&a}, "scale", [factor](std::span<const Real> g, std::span<GradSlot> gi) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i] * factor;
    });
}

Tensor reshape(const Tensor& a, Shape dims) {
    Tensor out = a.reshaped(std::move(dims));
    Tape* tape = tracking_tape({&a});
    if (!tape) return out;
    return tape->record(std::move(out), {&a}, "reshape", [](std::span<const Real> g, std::span<GradSlot> gi) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i];
    });
}

Tensor sum(const Tensor& a) {
    Real s = 0;
    for (Real v : a.data()) s += v;
    Tensor out = Tensor::scalar(s);
    Tape* tape = tracking_tape({&a});
    if (!tape) return out;
    return tape->record(std::move(out), {&a}, "sum", [](std::span<const Real> g, std::span<GradSlot> gi) {
        for (auto& v : *gi[0]) v += g[0];
    });
}

Tensor concat_channels(std::span<const Tensor> xs) {
    if (xs.empty()) throw ArgumentError("concat_channels: empty input list");
    for (const auto& x : xs) require_rank(x, 3, "concat_channels");
    const Index H = xs[0].dim(1), W = xs[0].dim(2);
    Index C = 0;
    for (const auto& x : xs) {
        if (x.dim(1) != H || x.dim(2) != W) {
            throw ShapeError("concat_channels: spatial mismatch " + shape_str(xs[0].dims()) + " vs " + shape_str(x.dims()));
        }
        C += x.dim(0);
    }
    std::vector<Real> values;
    values.reserve(static_cast<std::size_t>(C * H * W));
    std::vector<Index> sizes;
    for (const auto& x : xs) {
        values.insert(values.end(), x.data().begin(), x.data().end());
        sizes.push_back(x.numel());
    }
    Tensor out({C, H, W}, std::move(values));
    Tape* tape = tracking_tape(xs);
    if (!tape) return out;
    std::vector<const Tensor*> inputs;
    for (const auto& x : xs) inputs.push_back(&x);
    return tape->record(std::move(out), inputs, "concat_channels",
                        [sizes](std::span<const Real> g, std::span<GradSlot> gi) {
                            Index offset = 0;
                            for (std::size_t i = 0; i < sizes.size(); ++i) {
                                if (gi[i]) {
                                    auto& gx = *gi[i];
                                    for (Index k = 0; k < sizes[i]; ++k) gx[k] += g[offset + k];
                                }
                                offset += sizes[i];
                            }
                        });
}

Tensor slice_channels(const Tensor& x, std::int64_t begin, std::int64_t count) {
    require_rank(x, 3, "slice_channels");
    if (begin < 0 || count < 0 || begin + count > x.dim(0)) {
        throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + shape_str(x.dims()));
    }
    const Index HW = x.dim(1) * x.dim(2);
    auto xv = x.data();
    std::vector<Real> values(xv.begin() + begin * HW, xv.begin() + (begin + count) * HW);
    Tensor out({count, x.dim(1), x.dim(2)}, std::move(values));
    Tape* tape = tracking_tape({&x});
    if (!tape) return out;
    const Index offset = begin * HW;
    return tape->record(std::move(out), {&x}, "slice_channels", [offset](std::span<const Real> g, std::span<GradSlot> gi) {
        auto& gx = *gi[0];
        for (std::size_t k = 0; k < g.size(); ++k) gx[static_cast<std::size_t>(offset) + k] += g[k];
    });
}

namespace {

struct ConvGeometry {
    Index in_c, in_h, in_w, out_c, kh, kw, out_h, out_w;
    int stride, pad;
    Index patch() const { return in_c * kh * kw; }
    Index pixels() const { return out_h * out_w; }
    bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

void im2col(const ConvGeometry& g, const Real* x, Real* col) {
    const Index P = g.pixels();
    for (Index c = 0; c < g.in_c; ++c) {
        for (Index ky = 0; ky < g.kh; ++ky) {
            for (Index kx = 0; kx < g.kw; ++kx) {
                Real* row = col + ((c * g.kh + ky) * g.kw + kx) * P;
                for (Index oy = 0; oy < g.out_h; ++oy) {
                    const Index iy = oy * g.stride - g.pad + ky;
                    for (Index ox = 0; ox < g.out_w; ++ox) {
                        const Index ix = ox * g.stride - g.pad + kx;
                        row[oy * g.out_w + ox] = (iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w)
                                                     ? x[(c * g.in_h + iy) * g.in_w + ix]
                                                     : Real(0);
                    }
                }
            }
        }
    }
}

void col2im(const ConvGeometry& g, const Real* col, Real* x) {
    const Index P = g.pixels();
    for (Index c = 0; c < g.in_c; ++c) {
        for (Index ky = 0; ky < g.kh; ++ky) {
            for (Index kx = 0; kx < g.kw; ++kx) {
                const Real* row = col + ((c * g.kh + ky) * g.kw + kx) * P;
                for (Index oy = 0; oy < g.out_h; ++oy) {
                    const Index iy = oy * g.stride - g.pad + ky;
                    if (iy < 0 || iy >= g.in_h) continue;
                    for (Index ox = 0; ox < g.out_w; ++ox) {
                        const Index ix = ox * g.stride - g.pad + kx;
                        if (ix < 0 || ix >= g.in_w) continue;
                        x[(c * g.in_h + iy) * g.in_w + ix] += row[oy * g.out_w + ox];
                    }
                }
            }
        }
    }
}

Tensor conv2d_impl(const Tensor& x, const Tensor& w, const Tensor* b, int stride, int pad) {
    require_rank(x, 3, "conv2d input");
    require_rank(w, 4, "conv2d weight");
    if (stride < 1 || pad < 0) throw ArgumentError("conv2d: stride must be >= 1 and pad >= 0");
    ConvGeometry g{};
    g.in_c = x.dim(0);
    g.in_h = x.dim(1);
    g.in_w = x.dim(2);
    g.out_c = w.dim(0);
    g.kh = w.dim(2);
    g.kw = w.dim(3);
    g.stride = stride;
    g.pad = pad;
    if (w.dim(1) != g.in_c) {
        throw ShapeError("conv2d: input has " + std::to_string(g.in_c) + " channels, weight expects " +
                         std::to_string(w.dim(1)));
    }
    if (g.kh % 2 == 0 || g.kw % 2 == 0) throw ShapeError("conv2d: kernel extents must be odd");
    if (b && (b->rank() != 1 || b->dim(0) != g.out_c)) throw ShapeError("conv2d: bias must have shape [outC]");
    const Index num_h = g.in_h + 2 * pad - g.kh, num_w = g.in_w + 2 * pad - g.kw;
    if (num_h < 0 || num_w < 0) throw ShapeError("conv2d: non-positive output size for input " + shape_str(x.dims()));
    g.out_h = num_h / stride + 1;
    g.out_w = num_w / stride + 1;

    const Index P = g.pixels(), K = g.patch();
    std::vector<Real> col;
    const Real* colp = x.data().data();
    if (!g.pointwise()) {
        col.resize(static_cast<std::size_t>(K * P));
        im2col(g, x.data().data(), col.data());
        colp = col.data();
    }
    Tensor out({g.out_c, g.out_h, g.out_w});
    auto o = out.mutable_data();
    if (b) {
        auto bv = b->data();
        for (Index oc = 0; oc < g.out_c; ++oc) std::fill_n(o.data() + oc * P, P, bv[oc]);
    }
    kernels::gemm_nn(g.out_c, P, K, w.data().data(), colp, o.data(), b != nullptr);

    Tape* tape = tracking_tape({&x, &w, b});
    if (!tape) return out;
    Tensor xs = x.detached(), ws = w.detached();
    auto fn = [g, xs, ws](std::span<const Real> go, std::span<GradSlot> gi) {
        const Index P = g.pixels(), K = g.patch();
        std::vector<Real> colbuf;
        const Real* colp = xs.data().data();
        if (gi[1] && !g.pointwise()) {
            colbuf.resize(static_cast<std::size_t>(K * P));
            im2col(g, xs.data().data(), colbuf.data());
            colp = colbuf.data();
        }
        if (gi[1]) kernels::gemm_nt_acc(g.out_c, K, P, go.data(), colp, gi[1]->data());
        if (gi.size() > 2 && gi[2]) {
            auto& gb = *gi[2];
            for (Index oc = 0; oc < g.out_c; ++oc) {
                Real s = 0;
                for (Index p = 0; p < P; ++p) s += go[static_cast<std::size_t>(oc * P + p)];
                gb[static_cast<std::size_t>(oc)] += s;
            }
        }
        if (gi[0]) {
            if (g.pointwise()) {
                kernels::gemm_tn_acc(K, P, g.out_c, ws.data().data(), go.data(), gi[0]->data());
            } else {
                std::vector<Real> dcol(static_cast<std::size_t>(K * P), Real(0));
                kernels::gemm_tn_acc(K, P, g.out_c, ws.data().data(), go.data(), dcol.data());
                col2im(g, dcol.data(), gi[0]->data());
            }
        }
    };
    if (b) return tape->record(std::move(out), {&x, &w, b}, "conv2d", fn);
    return tape->record(std::move(out), {&x, &w}, "conv2d", fn);
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    return conv2d_impl(x, w, &b, stride, pad);
}

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad) { return conv2d_impl(x, w, nullptr, stride, pad); }

namespace {

struct Taps {
    std::vector<Index> lo, hi;
    std::vector<Real> frac;
};

Taps bilinear_taps(Index in, Index out) {
    Taps t;
    t.lo.resize(static_cast<std::size_t>(out));
    t.hi.resize(static_cast<std::size_t>(out));
    t.frac.resize(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (Index i = 0; i < out; ++i) {
        double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const auto lo = static_cast<Index>(std::floor(src));
        t.lo[static_cast<std::size_t>(i)] = lo;
        t.hi[static_cast<std::size_t>(i)] = std::min(lo + 1, in - 1);
        t.frac[static_cast<std::size_t>(i)] = static_cast<Real>(src - static_cast<double>(lo));
    }
    return t;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
    require_rank(x, 3, "bilinear_resize");
    if (out_h < 1 || out_w < 1) throw ArgumentError("bilinear_resize: output size must be at least 1x1");
    const Index C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const Taps ty = bilinear_taps(H, out_h), tx = bilinear_taps(W, out_w);
    Tensor out({C, out_h, out_w});
    auto o = out.mutable_data();
    auto xv = x.data();
    for (Index c = 0; c < C; ++c) {
        const Real* src = xv.data() + c * H * W;
        Real* dst = o.data() + c * out_h * out_w;
        for (Index oy = 0; oy < out_h; ++oy) {
            const Real ly = ty.frac[oy];
            const Real* r0 = src + ty.lo[oy] * W;
            const Real* r1 = src + ty.hi[oy] * W;
            for (Index ox = 0; ox < out_w; ++ox) {
                const Real lx = tx.frac[ox];
                const Index x0 = tx.lo[ox], x1 = tx.hi[ox];
                const Real top = (Real(1) - lx) * r0[x0] + lx * r0[x1];
                const Real bot = (Real(1) - lx) * r1[x0] + lx * r1[x1];
                dst[oy * out_w + ox] = (Real(1) - ly) * top + ly * bot;
            }
        }
    }
    Tape* tape = tracking_tape({&x});
    if (!tape) return out;
    return tape->record(std::move(out), {&x}, "bilinear_resize",
                        [ty, tx, C, H, W, out_h, out_w](std::span<const Real> g, std::span<GradSlot> gi) {
                            auto& gx = *gi[0];
                            for (Index c = 0; c < C; ++c) {
                                Real* dst = gx.data() + c * H * W;
                                const Real* go = g.data() + c * out_h * out_w;
                                for (Index oy = 0; oy < out_h; ++oy) {
                                    const Real ly = ty.frac[oy];
                                    Real* r0 = dst + ty.lo[oy] * W;
                                    Real* r1 = dst + ty.hi[oy] * W;
                                    for (Index ox = 0; ox < out_w; ++ox) {
                                        const Real lx = tx.frac[ox];
                                        const Index x0 = tx.lo[ox], x1 = tx.hi[ox];
                                        const Real v = go[oy * out_w + ox];
                                        r0[x0] += (Real(1) - ly) * (Real(1) - lx) * v;
                                        r0[x1] += (Real(1) - ly) * lx * v;
                                        r1[x0] += ly * (Real(1) - lx) * v;
                                        r1[x1] += ly * lx * v;
                                    }
                                }
                            }
                        });
}

Tensor global_avg_pool(const Tensor& x) {
    require_rank(x, 3, "global_avg_pool");
    const Index C = x.dim(0), HW = x.dim(1) * x.dim(2);
    if (HW < 1) throw ShapeError("global_avg_pool: empty spatial extent");
    Tensor out({C});
    auto o = out.mutable_data();
    auto xv = x.data();
    for (Index c = 0; c < C; ++c) {
        Real s = 0;
        for (Index i = 0; i < HW; ++i) s += xv[c * HW + i];
        o[c] = s / static_cast<Real>(HW);
    }
    Tape* tape = tracking_tape({&x});
    if (!tape) return out;
    return tape->record(std::move(out), {&x}, "global_avg_pool", [C, HW](std::span<const Real> g, std::span<GradSlot> gi) {
        auto& gx = *gi[0];
        for (Index c = 0; c < C; ++c) {
            const Real v = g[c] / static_cast<Real>(HW);
            for (Index i = 0; i < HW; ++i) gx[c * HW + i] += v;
        }
    });
}

namespace {

Real stable_sigmoid(Real v) {
    if (v >= 0) return Real(1) / (Real(1) + std::exp(-v));
    const Real e = std::exp(v);
    return e / (Real(1) + e);
}

}  // namespace

Tensor elementwise(Activation kind, const Tensor& x) {
    Tensor out(x.dims());
    auto o = out.mutable_data();
    auto xv = x.data();
    const Index n = x.numel();
    switch (kind) {
        case Activation::Sigmoid:
            for (Index i = 0; i < n; ++i) o[i] = stable_sigmoid(xv[i]);
            break;
        case Activation::Tanh:
            for (Index i = 0; i < n; ++i) o[i] = std::tanh(xv[i]);
            break;
        case Activation::Relu:
            for (Index i = 0; i < n; ++i) o[i] = xv[i] > 0 ? xv[i] : Real(0);
            break;
    }
    Tape* tape = tracking_tape({&x});
    if (!tape) return out;
    static constexpr const char* names[] = {"sigmoid", "tanh", "relu"};
    // Sigmoid and tanh derivatives are expressed through the output, relu through the input.
    Tensor saved = kind == Activation::Relu ? x.detached() : out.detached();
    return tape->record(std::move(out), {&x}, names[static_cast<int>(kind)],
                        [kind, saved](std::span<const Real> g, std::span<GradSlot> gi) {
                            auto& gx = *gi[0];
                            auto s = saved.data();
                            switch (kind) {
                                case Activation::Sigmoid:
                                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s[i] * (Real(1) - s[i]);
                                    break;
                                case Activation::Tanh:
                                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (Real(1) - s[i] * s[i]);
                                    break;
                                case Activation::Relu:
                                    for (std::size_t i = 0; i < g.size(); ++i)
                                        if (s[i] > 0) gx[i] += g[i];
                                    break;
                            }
                        });
}

namespace {

Tensor fc_impl(const Tensor& x, const Tensor& w, const Tensor* b) {
    require_rank(x, 1, "fc input");
    require_rank(w, 2, "fc weight");
    const Index out_n = w.dim(0), in_n = w.dim(1);
    if (x.dim(0) != in_n) {
        throw ShapeError("fc: input length " + std::to_string(x.dim(0)) + " does not match weight " + shape_str(w.dims()));
    }
    if (b && (b->rank() != 1 || b->dim(0) != out_n)) throw ShapeError("fc: bias must have shape [out]");
    Tensor out({out_n});
    auto o = out.mutable_data();
    auto wv = w.data();
    auto xv = x.data();
    for (Index r = 0; r < out_n; ++r) {
        o[r] = kernels::dot(wv.data() + r * in_n, xv.data(), in_n) + (b ? b->data()[r] : Real(0));
    }
    Tape* tape = tracking_tape({&x, &w, b});
    if (!tape) return out;
    auto fn = [xs = x.detached(), ws = w.detached(), out_n, in_n](std::span<const Real> g, std::span<GradSlot> gi) {
        auto xv = xs.data();
        auto wv = ws.data();
        if (gi[0]) {
            auto& gx = *gi[0];
            for (Index r = 0; r < out_n; ++r)
                for (Index c = 0; c < in_n; ++c) gx[c] += wv[r * in_n + c] * g[r];
        }
        if (gi[1]) {
            auto& gw = *gi[1];
            for (Index r = 0; r < out_n; ++r)
                for (Index c = 0; c < in_n; ++c) gw[r * in_n + c] += g[r] * xv[c];
        }
        if (gi.size() > 2 && gi[2]) {
            for (Index r = 0; r < out_n; ++r) (*gi[2])[r] += g[r];
        }
    };
    if (b) return tape->record(std::move(out), {&x, &w, b}, "fc", fn);
    return tape->record(std::move(out), {&x, &w}, "fc", fn);
}

}  // namespace

Tensor fc(const Tensor& x, const Tensor& w, const Tensor& b) { return fc_impl(x, w, &b); }
Tensor fc(const Tensor& x, const Tensor& w) { return fc_impl(x, w, nullptr); }

Tensor head_rows(const Tensor& x, std::int64_t groups) {
    require_rank(x, 3, "head_rows");
    if (groups < 1 || x.dim(0) % groups != 0) {
        throw ShapeError("head_rows: " + std::to_string(x.dim(0)) + " channels not divisible into " +
                         std::to_string(groups) + " groups");
    }
    const Index M = x.dim(0) / groups, HW = x.dim(1) * x.dim(2);
    const Index rows = HW * groups;
    // index[r * M + m] -> source element
    std::vector<Index> index(static_cast<std::size_t>(rows * M));
    for (Index p = 0; p < HW; ++p)
        for (Index g = 0; g < groups; ++g)
            for (Index m = 0; m < M; ++m) index[static_cast<std::size_t>((p * groups + g) * M + m)] = (g * M + m) * HW + p;
    Tensor out({rows, M});
    auto o = out.mutable_data();
    auto xv = x.data();
    for (std::size_t i = 0; i < index.size(); ++i) o[i] = xv[static_cast<std::size_t>(index[i])];
    Tape* tape = tracking_tape({&x});
    if (!tape) return out;
    return tape->record(std::move(out), {&x}, "head_rows",
                        [index = std::move(index)](std::span<const Real> g, std::span<GradSlot> gi) {
                            auto& gx = *gi[0];
                            for (std::size_t i = 0; i < index.size(); ++i) gx[static_cast<std::size_t>(index[i])] += g[i];
                        });
}

Tensor concat_rows(std::span<const Tensor> xs) {
    if (xs.empty()) throw ArgumentError("concat_rows: empty input list");
    const Index M = xs[0].rank() == 2 ? xs[0].dim(1) : -1;
    Index N = 0;
    std::vector<Index> sizes;
    for (const auto& x : xs) {
        if (x.rank() != 2 || x.dim(1) != M) throw ShapeError("concat_rows: expected [N, " + std::to_string(M) + "] inputs");
        N += x.dim(0);
        sizes.push_back(x.numel());
    }
    std::vector<Real> values;
    values.reserve(static_cast<std::size_t>(N * M));
    for (const auto& x : xs) values.insert(values.end(), x.data().begin(), x.data().end());
    Tensor out({N, M}, std::move(values));
    Tape* tape = tracking_tape(xs);
    if (!tape) return out;
    std::vector<const Tensor*> inputs;
    for (const auto& x : xs) inputs.push_back(&x);
    return tape->record(std::move(out), inputs, "concat_rows", [sizes](std::span<const Real> g, std::span<GradSlot> gi) {
        Index offset = 0;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (gi[i])
                for (Index k = 0; k < sizes[i]; ++k) (*gi[i])[k] += g[offset + k];
            offset += sizes[i];
        }
    });
}

Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> rows) {
    require_rank(x, 2, "gather_rows");
    const Index N = x.dim(0), M = x.dim(1);
    std::vector<Index> idx(rows.begin(), rows.end());
    Tensor out({static_cast<Index>(idx.size()), M});
    auto o = out.mutable_data();
    auto xv = x.data();
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] < 0 || idx[r] >= N) throw ArgumentError("gather_rows: row index out of range");
        std::copy_n(xv.data() + idx[r] * M, M, o.data() + static_cast<Index>(r) * M);
    }
    Tape* tape = tracking_tape({&x});
    if (!tape) return out;
    return tape->record(std::move(out), {&x}, "gather_rows", [idx, M](std::span<const Real> g, std::span<GradSlot> gi) {
        auto& gx = *gi[0];
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (Index m = 0; m < M; ++m) gx[idx[r] * M + m] += g[static_cast<Index>(r) * M + m];
    });
}

namespace {

void check_labels(const Tensor& logits, std::span<const int> labels) {
    require_rank(logits, 2, "softmax_cross_entropy");
    if (static_cast<Index>(labels.size()) != logits.dim(0)) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.dim(0)) + " rows");
    }
    for (int l : labels) {
        if (l < 0 || l >= logits.dim(1)) throw ArgumentError("softmax_cross_entropy: label " + std::to_string(l) + " out of range");
    }
}

}  // namespace

Tensor softmax_rows(const Tensor& logits) {
    require_rank(logits, 2, "softmax_rows");
    const Index N = logits.dim(0), C = logits.dim(1);
    Tensor out(logits.dims());
    auto o = out.mutable_data();
    auto lv = logits.data();
    for (Index n = 0; n < N; ++n) {
        const Real* row = lv.data() + n * C;
        const Real mx = *std::max_element(row, row + C);
        Real z = 0;
        for (Index c = 0; c < C; ++c) {
            o[n * C + c] = std::exp(row[c] - mx);
            z += o[n * C + c];
        }
        for (Index c = 0; c < C; ++c) o[n * C + c] /= z;
    }
    return out;
}

std::vector<Real> row_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    check_labels(logits, labels);
    const Index N = logits.dim(0), C = logits.dim(1);
    auto lv = logits.data();
    std::vector<Real> out(static_cast<std::size_t>(N));
    for (Index n = 0; n < N; ++n) {
        const Real* row = lv.data() + n * C;
        const Real mx = *std::max_element(row, row + C);
        Real z = 0;
        for (Index c = 0; c < C; ++c) z += std::exp(row[c] - mx);
        out[n] = std::log(z) + mx - row[labels[n]];
    }
    return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    check_labels(logits, labels);
    const Index N = logits.dim(0), C = logits.dim(1);
    if (N == 0) throw ArgumentError("softmax_cross_entropy: no rows");
    const std::vector<Real> ce = row_cross_entropy(logits, labels);
    Real total = 0;
    for (Real v : ce) total += v;
    Tensor out = Tensor::scalar(total / static_cast<Real>(N));
    Tape* tape = tracking_tape({&logits});
    if (!tape) return out;
    return tape->record(std::move(out), {&logits}, "softmax_cross_entropy",
                        [probs = softmax_rows(logits), lab = std::vector<int>(labels.begin(), labels.end()), N, C](
                            std::span<const Real> g, std::span<GradSlot> gi) {
                            auto& gl = *gi[0];
                            auto p = probs.data();
                            const Real s = g[0] / static_cast<Real>(N);
                            for (Index n = 0; n < N; ++n)
                                for (Index c = 0; c < C; ++c)
                                    gl[n * C + c] += s * (p[n * C + c] - (c == lab[n] ? Real(1) : Real(0)));
                        });
}

Tensor smooth_l1(const Tensor& pred, const Tensor& target) {
    if (pred.dims() != target.dims()) {
        throw ShapeError("smooth_l1: shape mismatch " + shape_str(pred.dims()) + " vs " + shape_str(target.dims()));
    }
    const Index n = pred.numel();
    if (n == 0) throw ArgumentError("smooth_l1: empty input");
    auto pv = pred.data();
    auto tv = target.data();
    Real total = 0;
    for (Index i = 0; i < n; ++i) {
        const Real d = pv[i] - tv[i];
        const Real ad = std::abs(d);
        total += ad < Real(1) ? Real(0.5) * d * d : ad - Real(0.5);
    }
    Tensor out = Tensor::scalar(total / static_cast<Real>(n));
    Tape* tape = tracking_tape({&pred, &target});
    if (!tape) return out;
    return tape->record(std::move(out), {&pred, &target}, "smooth_l1",
                        [p = pred.detached(), t = target.detached(), n](std::span<const Real> g, std::span<GradSlot> gi) {
                            auto pv = p.data();
                            auto tv = t.data();
                            const Real s = g[0] / static_cast<Real>(n);
                            for (Index i = 0; i < n; ++i) {
                                const Real d = pv[i] - tv[i];
                                const Real dd = std::abs(d) < Real(1) ? d : (d > 0 ? Real(1) : Real(-1));
                                if (gi[0]) (*gi[0])[i] += s * dd;
                                if (gi[1]) (*gi[1])[i] -= s * dd;
                            }
                        });
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf

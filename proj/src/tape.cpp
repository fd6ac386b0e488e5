#include "dualcausal/tape.hpp"

#include <cmath>

#include "dualcausal/errors.hpp"

namespace dcl {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

void check_matrix(const Tensor& t, const char* op) {
    if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected rank 2, got " + t.shape_str());
}

} // namespace

Var Tape::push(Tensor value, std::function<void(Tape&, const Tensor&)> backward) {
    Node n;
    n.value = std::move(value);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(Var v, const Tensor& g) {
    Node& n = nodes_[v.id];
    if (!n.grad_touched) {
        n.grad = Tensor::zeros(n.value.shape);
        n.grad_touched = true;
    }
    for (std::size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
}

Var Tape::leaf(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::input(Param& param) {
    Var v = push(param.value, nullptr);
    nodes_[v.id].bound_param = &param;
    return v;
}

Var Tape::add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    check_same_shape(ta, tb, "add");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var Tape::sub(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    check_same_shape(ta, tb, "sub");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= tb.data[i];
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, g);
        Tensor neg = g;
        for (double& v : neg.data) v = -v;
        t.accumulate(b, neg);
    });
}

Var Tape::mul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    check_same_shape(ta, tb, "mul");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= tb.data[i];
    return push(std::move(out), [a, b](Tape& t, const Tensor& g) {
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        Tensor ga = g;
        Tensor gb = g;
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            ga.data[i] *= vb.data[i];
            gb.data[i] *= va.data[i];
        }
        t.accumulate(a, ga);
        t.accumulate(b, gb);
    });
}

Var Tape::scale(Var a, double c) {
    Tensor out = value(a);
    for (double& v : out.data) v *= c;
    return push(std::move(out), [a, c](Tape& t, const Tensor& g) {
        Tensor ga = g;
        for (double& v : ga.data) v *= c;
        t.accumulate(a, ga);
    });
}

Var Tape::add_rowvec(Var a, Var v) {
    const Tensor& ta = value(a);
    const Tensor& tv = value(v);
    check_matrix(ta, "add_rowvec");
    if (tv.rank() != 1 || tv.shape[0] != ta.shape[1]) {
        throw ShapeError("add_rowvec: vector " + tv.shape_str() + " does not match matrix " + ta.shape_str());
    }
    Tensor out = ta;
    const std::size_t rows = ta.shape[0];
    const std::size_t cols = ta.shape[1];
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out(r, c) += tv.data[c];
    return push(std::move(out), [a, v, rows, cols](Tape& t, const Tensor& g) {
        t.accumulate(a, g);
        Tensor gv = Tensor::zeros({cols});
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) gv.data[c] += g(r, c);
        t.accumulate(v, gv);
    });
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    check_matrix(ta, "matmul");
    check_matrix(tb, "matmul");
    if (ta.shape[1] != tb.shape[0]) {
        throw ShapeError("matmul: inner extents disagree " + ta.shape_str() + " * " + tb.shape_str());
    }
    const std::size_t n = ta.shape[0], k = ta.shape[1], m = tb.shape[1];
    Tensor out = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ta(i, p);
            for (std::size_t j = 0; j < m; ++j) out(i, j) += av * tb(p, j);
        }
    return push(std::move(out), [a, b, n, k, m](Tape& t, const Tensor& g) {
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        Tensor ga = Tensor::zeros({n, k});
        Tensor gb = Tensor::zeros({k, m});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                const double gv = g(i, j);
                for (std::size_t p = 0; p < k; ++p) {
                    ga(i, p) += gv * vb(p, j);
                    gb(p, j) += va(i, p) * gv;
                }
            }
        t.accumulate(a, ga);
        t.accumulate(b, gb);
    });
}

Var Tape::transpose(Var a) {
    const Tensor& ta = value(a);
    check_matrix(ta, "transpose");
    const std::size_t n = ta.shape[0], m = ta.shape[1];
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out(j, i) = ta(i, j);
    return push(std::move(out), [a, n, m](Tape& t, const Tensor& g) {
        Tensor ga = Tensor::zeros({n, m});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) ga(i, j) = g(j, i);
        t.accumulate(a, ga);
    });
}

Var Tape::softmax(Var logits, double tau, std::size_t axis) {
    Tensor out = softmax_temp(value(logits), tau, axis);
    const Tensor& tl = value(logits);
    const std::size_t extent = tl.shape[axis];
    std::size_t inner = 1;
    for (std::size_t ax = axis + 1; ax < tl.rank(); ++ax) inner *= tl.shape[ax];
    const std::size_t outer = tl.numel() / (extent * inner);
    Var result = push(std::move(out), nullptr);
    nodes_[result.id].backward = [logits, result, tau, extent, inner, outer](Tape& t, const Tensor& g) {
        const Tensor& y = t.value(result);
        Tensor gl = Tensor::zeros(y.shape);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t in = 0; in < inner; ++in) {
                const std::size_t base = o * extent * inner + in;
                double dot = 0.0;
                for (std::size_t k = 0; k < extent; ++k) {
                    const std::size_t idx = base + k * inner;
                    dot += g.data[idx] * y.data[idx];
                }
                for (std::size_t k = 0; k < extent; ++k) {
                    const std::size_t idx = base + k * inner;
                    gl.data[idx] = y.data[idx] * (g.data[idx] - dot) / tau;
                }
            }
        }
        t.accumulate(logits, gl);
    };
    return result;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
    const Tensor& tx = value(x);
    const Tensor& tg = value(gain);
    const Tensor& tb = value(bias);
    Tensor out = dcl::layer_norm(tx, tg, tb, eps);
    const std::size_t width = tx.shape.back();
    const std::size_t rows = tx.numel() / width;
    return push(std::move(out), [x, gain, bias, eps, width, rows](Tape& t, const Tensor& g) {
        const Tensor& vx = t.value(x);
        const Tensor& vg = t.value(gain);
        Tensor gx = Tensor::zeros(vx.shape);
        Tensor ggain = Tensor::zeros({width});
        Tensor gbias = Tensor::zeros({width});
        const double n = static_cast<double>(width);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = &vx.data[r * width];
            double mean = 0.0;
            for (std::size_t i = 0; i < width; ++i) mean += row[i];
            mean /= n;
            double var = 0.0;
            for (std::size_t i = 0; i < width; ++i) {
                const double d = row[i] - mean;
                var += d * d;
            }
            var /= n;
            const double denom = std::sqrt(var + eps);
            const double inv = denom > 0.0 ? 1.0 / denom : 0.0;
            // xhat_i = (x_i - mean) * inv; dx = inv*(dxhat - mean(dxhat) - xhat*mean(dxhat .* xhat))
            double mean_dxhat = 0.0;
            double mean_dxhat_xhat = 0.0;
            for (std::size_t i = 0; i < width; ++i) {
                const double xhat = (row[i] - mean) * inv;
                const double gy = g.data[r * width + i];
                const double dxhat = gy * vg.data[i];
                ggain.data[i] += gy * xhat;
                gbias.data[i] += gy;
                mean_dxhat += dxhat;
                mean_dxhat_xhat += dxhat * xhat;
            }
            mean_dxhat /= n;
            mean_dxhat_xhat /= n;
            for (std::size_t i = 0; i < width; ++i) {
                const double xhat = (row[i] - mean) * inv;
                const double dxhat = g.data[r * width + i] * vg.data[i];
                gx.data[r * width + i] = inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
            }
        }
        t.accumulate(x, gx);
        t.accumulate(gain, ggain);
        t.accumulate(bias, gbias);
    });
}

Var Tape::linear(Var x, Var weight, Var bias) {
    const Tensor& tx = value(x);
    if (tx.rank() == 1) {
        // Route through the rank-2 path to keep one backward implementation.
        Tensor as_row = Tensor::from({1, tx.shape[0]}, tx.data);
        Var xr = push(std::move(as_row), [x](Tape& t, const Tensor& g) {
            Tensor gv = Tensor::from({g.data.size()}, g.data);
            t.accumulate(x, gv);
        });
        Var y = add_rowvec(matmul(xr, transpose(weight)), bias);
        const Tensor& ty = value(y);
        Tensor flat = Tensor::from({ty.shape[1]}, ty.data);
        return push(std::move(flat), [y](Tape& t, const Tensor& g) {
            Tensor gm = Tensor::from({1, g.data.size()}, g.data);
            t.accumulate(y, gm);
        });
    }
    return add_rowvec(matmul(x, transpose(weight)), bias);
}

Var Tape::concat_cols(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    check_matrix(ta, "concat_cols");
    check_matrix(tb, "concat_cols");
    if (ta.shape[0] != tb.shape[0]) {
        throw ShapeError("concat_cols: row counts differ " + ta.shape_str() + " vs " + tb.shape_str());
    }
    const std::size_t rows = ta.shape[0], ca = ta.shape[1], cb = tb.shape[1];
    Tensor out = Tensor::zeros({rows, ca + cb});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < ca; ++c) out(r, c) = ta(r, c);
        for (std::size_t c = 0; c < cb; ++c) out(r, ca + c) = tb(r, c);
    }
    return push(std::move(out), [a, b, rows, ca, cb](Tape& t, const Tensor& g) {
        Tensor ga = Tensor::zeros({rows, ca});
        Tensor gb = Tensor::zeros({rows, cb});
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < ca; ++c) ga(r, c) = g(r, c);
            for (std::size_t c = 0; c < cb; ++c) gb(r, c) = g(r, ca + c);
        }
        t.accumulate(a, ga);
        t.accumulate(b, gb);
    });
}

Var Tape::slice_cols(Var a, std::size_t col_begin, std::size_t col_end) {
    const Tensor& ta = value(a);
    check_matrix(ta, "slice_cols");
    if (col_begin >= col_end || col_end > ta.shape[1]) {
        throw ShapeError("slice_cols: range [" + std::to_string(col_begin) + "," + std::to_string(col_end) +
                         ") invalid for " + ta.shape_str());
    }
    const std::size_t rows = ta.shape[0], cols = col_end - col_begin, full = ta.shape[1];
    Tensor out = Tensor::zeros({rows, cols});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out(r, c) = ta(r, col_begin + c);
    return push(std::move(out), [a, rows, cols, full, col_begin](Tape& t, const Tensor& g) {
        Tensor ga = Tensor::zeros({rows, full});
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) ga(r, col_begin + c) = g(r, c);
        t.accumulate(a, ga);
    });
}

Var Tape::per_dim_logits(Var frames, Var bank) {
    const Tensor& tf = value(frames);
    const Tensor& tb = value(bank);
    check_matrix(tf, "per_dim_logits");
    check_matrix(tb, "per_dim_logits");
    if (tf.shape[1] != tb.shape[1]) {
        throw ShapeError("per_dim_logits: feature dims differ " + tf.shape_str() + " vs " + tb.shape_str());
    }
    const std::size_t frames_n = tf.shape[0], dim = tf.shape[1], classes = tb.shape[0];
    Tensor out = Tensor::zeros({classes, frames_n, dim});
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t l = 0; l < frames_n; ++l)
            for (std::size_t d = 0; d < dim; ++d) out(c, l, d) = tf(l, d) * tb(c, d);
    return push(std::move(out), [frames, bank, frames_n, dim, classes](Tape& t, const Tensor& g) {
        const Tensor& vf = t.value(frames);
        const Tensor& vb = t.value(bank);
        Tensor gf = Tensor::zeros({frames_n, dim});
        Tensor gb = Tensor::zeros({classes, dim});
        for (std::size_t c = 0; c < classes; ++c)
            for (std::size_t l = 0; l < frames_n; ++l)
                for (std::size_t d = 0; d < dim; ++d) {
                    const double gv = g(c, l, d);
                    gf(l, d) += gv * vb(c, d);
                    gb(c, d) += gv * vf(l, d);
                }
        t.accumulate(frames, gf);
        t.accumulate(bank, gb);
    });
}

Var Tape::frame_weighted_sum(Var scores, Var frames) {
    const Tensor& ts = value(scores);
    const Tensor& tf = value(frames);
    if (ts.rank() != 3) throw ShapeError("frame_weighted_sum: scores must be rank 3, got " + ts.shape_str());
    check_matrix(tf, "frame_weighted_sum");
    if (ts.shape[1] != tf.shape[0] || ts.shape[2] != tf.shape[1]) {
        throw ShapeError("frame_weighted_sum: scores " + ts.shape_str() + " do not match frames " + tf.shape_str());
    }
    const std::size_t classes = ts.shape[0], frames_n = ts.shape[1], dim = ts.shape[2];
    Tensor out = Tensor::zeros({classes, dim});
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t l = 0; l < frames_n; ++l)
            for (std::size_t d = 0; d < dim; ++d) out(c, d) += ts(c, l, d) * tf(l, d);
    return push(std::move(out), [scores, frames, classes, frames_n, dim](Tape& t, const Tensor& g) {
        const Tensor& vs = t.value(scores);
        const Tensor& vf = t.value(frames);
        Tensor gs = Tensor::zeros({classes, frames_n, dim});
        Tensor gf = Tensor::zeros({frames_n, dim});
        for (std::size_t c = 0; c < classes; ++c)
            for (std::size_t l = 0; l < frames_n; ++l)
                for (std::size_t d = 0; d < dim; ++d) {
                    const double gv = g(c, d);
                    gs(c, l, d) = gv * vf(l, d);
                    gf(l, d) += gv * vs(c, l, d);
                }
        t.accumulate(scores, gs);
        t.accumulate(frames, gf);
    });
}

Var Tape::mean_rows(Var a) {
    const Tensor& ta = value(a);
    check_matrix(ta, "mean_rows");
    const std::size_t rows = ta.shape[0], cols = ta.shape[1];
    Tensor out = Tensor::zeros({cols});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out.data[c] += ta(r, c);
    for (double& v : out.data) v /= static_cast<double>(rows);
    return push(std::move(out), [a, rows, cols](Tape& t, const Tensor& g) {
        Tensor ga = Tensor::zeros({rows, cols});
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) ga(r, c) = g.data[c] / static_cast<double>(rows);
        t.accumulate(a, ga);
    });
}

Var Tape::broadcast_rows(Var v, std::size_t rows) {
    const Tensor& tv = value(v);
    if (tv.rank() != 1) throw ShapeError("broadcast_rows: expected vector, got " + tv.shape_str());
    const std::size_t cols = tv.shape[0];
    Tensor out = Tensor::zeros({rows, cols});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out(r, c) = tv.data[c];
    return push(std::move(out), [v, rows, cols](Tape& t, const Tensor& g) {
        Tensor gv = Tensor::zeros({cols});
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) gv.data[c] += g(r, c);
        t.accumulate(v, gv);
    });
}

Var Tape::row_dot(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    check_matrix(ta, "row_dot");
    check_same_shape(ta, tb, "row_dot");
    const std::size_t rows = ta.shape[0], cols = ta.shape[1];
    Tensor out = Tensor::zeros({rows});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out.data[r] += ta(r, c) * tb(r, c);
    return push(std::move(out), [a, b, rows, cols](Tape& t, const Tensor& g) {
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        Tensor ga = Tensor::zeros({rows, cols});
        Tensor gb = Tensor::zeros({rows, cols});
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                ga(r, c) = g.data[r] * vb(r, c);
                gb(r, c) = g.data[r] * va(r, c);
            }
        t.accumulate(a, ga);
        t.accumulate(b, gb);
    });
}

Var Tape::cross_entropy_with_logits(Var logits, std::size_t target) {
    const Tensor& tl = value(logits);
    if (tl.rank() != 1) throw ShapeError("cross_entropy_with_logits: expected vector, got " + tl.shape_str());
    if (target >= tl.shape[0]) throw InvalidArgumentError("cross_entropy_with_logits: target out of range");
    const std::size_t n = tl.shape[0];
    double mx = tl.data[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, tl.data[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::exp(tl.data[i] - mx);
    const double loss = std::log(sum) + mx - tl.data[target];
    return push(Tensor::from({1}, {loss}), [logits, target, n, mx, sum](Tape& t, const Tensor& g) {
        const Tensor& vl = t.value(logits);
        Tensor gl = Tensor::zeros({n});
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::exp(vl.data[i] - mx) / sum;
            gl.data[i] = g.data[0] * (p - (i == target ? 1.0 : 0.0));
        }
        t.accumulate(logits, gl);
    });
}

Var Tape::binary_cross_entropy_with_logits(Var logits, const Tensor& targets) {
    const Tensor& tl = value(logits);
    if (tl.rank() != 1) throw ShapeError("binary_cross_entropy_with_logits: expected vector");
    check_same_shape(tl, targets, "binary_cross_entropy_with_logits");
    const std::size_t n = tl.shape[0];
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = tl.data[i];
        const double y = targets.data[i];
        // max(z,0) - z*y + log(1 + exp(-|z|)) is the stable form.
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    loss /= static_cast<double>(n);
    Tensor tcopy = targets;
    return push(Tensor::from({1}, {loss}), [logits, tcopy, n](Tape& t, const Tensor& g) {
        const Tensor& vl = t.value(logits);
        Tensor gl = Tensor::zeros({n});
        for (std::size_t i = 0; i < n; ++i) {
            const double s = 1.0 / (1.0 + std::exp(-vl.data[i]));
            gl.data[i] = g.data[0] * (s - tcopy.data[i]) / static_cast<double>(n);
        }
        t.accumulate(logits, gl);
    });
}

Var Tape::mean_of(const std::vector<Var>& terms) {
    if (terms.empty()) throw InvalidArgumentError("mean_of: no terms");
    double acc = 0.0;
    for (Var v : terms) {
        const Tensor& tv = value(v);
        if (tv.numel() != 1) throw ShapeError("mean_of: terms must be scalars");
        acc += tv.data[0];
    }
    acc /= static_cast<double>(terms.size());
    std::vector<Var> parents = terms;
    return push(Tensor::from({1}, {acc}), [parents](Tape& t, const Tensor& g) {
        Tensor share = Tensor::from({1}, {g.data[0] / static_cast<double>(parents.size())});
        for (Var p : parents) t.accumulate(p, share);
    });
}

Var Tape::sum_squares(Var a) {
    const Tensor& ta = value(a);
    double acc = 0.0;
    for (double v : ta.data) acc += v * v;
    return push(Tensor::from({1}, {acc}), [a](Tape& t, const Tensor& g) {
        const Tensor& va = t.value(a);
        Tensor ga = Tensor::zeros(va.shape);
        for (std::size_t i = 0; i < va.data.size(); ++i) ga.data[i] = 2.0 * va.data[i] * g.data[0];
        t.accumulate(a, ga);
    });
}

void Tape::backward(Var out) {
    if (value(out).numel() != 1) throw ShapeError("backward: output must be scalar");
    accumulate(out, Tensor::from({1}, {1.0}));
    for (int i = out.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.grad_touched) continue;
        if (n.backward) n.backward(*this, n.grad);
        if (n.bound_param) {
            for (std::size_t k = 0; k < n.grad.data.size(); ++k) {
                n.bound_param->grad.data[k] += n.grad.data[k];
            }
        }
    }
}

} // namespace dcl

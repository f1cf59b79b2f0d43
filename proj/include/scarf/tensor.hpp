// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scarf/errors.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

// Element precision is fixed per build of the library: single precision for
// training, double precision for the gradient-check build.
#ifdef SCARF_USE_DOUBLE
using Real = double;
#else
using Real = float;
#endif

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& dims);
std::string shape_str(const Shape& dims);

class Tape;

/// Dense row-major tensor. Feature maps use the [C, H, W] layout.
///
/// Storage is shared between copies and treated as immutable; mutable_data()
/// detaches the storage first when it is shared. A tensor may additionally
/// carry a reference to a node on a gradient tape.
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape dims);
    Tensor(Shape dims, std::vector<Real> values);

    static Tensor zeros(Shape dims) { return Tensor(std::move(dims)); }
    static Tensor full(Shape dims, Real value);
    static Tensor scalar(Real value);

    const Shape& dims() const { return dims_; }
    int rank() const { return static_cast<int>(dims_.size()); }
    std::int64_t dim(int i) const;
    std::int64_t numel() const { return static_cast<std::int64_t>(data_->size()); }

    std::span<const Real> data() const { return *data_; }
    std::span<Real> mutable_data();
    const std::vector<Real>& values() const { return *data_; }

    Real item() const;
    Real operator[](std::int64_t i) const { return (*data_)[static_cast<std::size_t>(i)]; }
    /// Element of a [C, H, W] tensor.
    Real at(std::int64_t c, std::int64_t y, std::int64_t x) const;

    bool requires_grad() const { return requires_grad_; }
    std::int64_t node_id() const { return node_; }
    std::uint64_t tape_id() const { return tape_id_; }
    bool is_tracked() const { return node_ >= 0; }

    /// Same values, no tape reference.
    Tensor detached() const;
    /// Deep copy of the values, no tape reference.
    Tensor clone() const;
    Tensor reshaped(Shape dims) const;

private:
    friend class Tape;

    Shape dims_;
    std::shared_ptr<std::vector<Real>> data_;
    bool requires_grad_ = false;
    std::int64_t node_ = -1;
    std::uint64_t tape_id_ = 0;
};

/// Gradient buffer handed to a backward function for one input; null when the
/// input does not participate in differentiation.
using GradSlot = std::vector<Real>*;
using BackwardFn = std::function<void(std::span<const Real> grad_out, std::span<GradSlot> grad_in)>;

/// Reverse-mode gradient tape.
///
/// Constructing a tape makes it the active tape of the calling thread until it
/// is destroyed; operations whose inputs live on the active tape record a node.
/// Node ids strictly increase in creation order and backward() visits them in
/// reverse, once each.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// The innermost live tape on this thread, or null.
    static Tape* active();

    /// Registers `leaf` as a differentiable input and returns the tracked handle.
    Tensor watch(const Tensor& leaf);

    /// True when `t` refers to a node of this tape.
    bool tracks(const Tensor& t) const;

    /// Records an operation result. Returns `out` unchanged (untracked) when no
    /// input is tracked by this tape.
    Tensor record(Tensor out, std::initializer_list<const Tensor*> inputs, std::string_view op, BackwardFn fn);
    Tensor record(Tensor out, std::span<const Tensor* const> inputs, std::string_view op, BackwardFn fn);

    /// Populates gradients for every node reachable from the scalar `loss`.
    void backward(const Tensor& loss);

    /// Gradient of the loss with respect to the leaf `t`; zeros when `t` was not
    /// reached. Interior gradients are released during backward().
    Tensor grad(const Tensor& t) const;

    /// Drops all nodes and gradients. Previously tracked tensors become detached.
    void reset();

    std::size_t size() const { return nodes_.size(); }
    std::uint64_t id() const { return id_; }
    const std::string& op_name(std::int64_t node) const { return nodes_.at(static_cast<std::size_t>(node)).op; }

private:
    struct Node {
        std::string op;
        std::vector<std::int64_t> inputs;
        Shape dims;
        BackwardFn backward;
    };

    std::int64_t push_node(std::string_view op, std::vector<std::int64_t> inputs, const Shape& dims, BackwardFn fn);

    std::uint64_t id_;
    std::vector<Node> nodes_;
    std::vector<std::vector<Real>> grads_;
    bool backward_done_ = false;
    Tape* previous_ = nullptr;
};

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf

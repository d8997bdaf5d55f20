// Copyright 2026 The LGSO Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Graph building blocks shared by the surrogate sources.

#include <vector>

#include "lgso/surrogate.hpp"

namespace lgso::surrogate::detail {

using diff::Graph;
using diff::NodeId;

struct LayerNodes {
  NodeId weight;
  NodeId bias;
  diff::Activation activation;
};

/// Weights as graph constants (frozen model).
std::vector<LayerNodes> constant_layers(Graph& g, const Mlp& mlp, const std::string& prefix);
/// Weights as trainable parameters, Glorot-uniform initialised. When
/// `zero_last` is set the output layer starts at zero.
std::vector<LayerNodes> parameter_layers(Graph& g, std::size_t in, const std::vector<std::size_t>& hidden,
                                         std::size_t out, const std::string& prefix, Rng& rng, bool zero_last);
Mlp extract_layers(const Graph& g, const std::vector<LayerNodes>& layers);
std::vector<NodeId> layer_parameters(const std::vector<LayerNodes>& layers);

/// Hidden layers use tanh except the last hidden one, which is leaky ReLU.
std::vector<diff::Activation> hidden_activations(std::size_t hidden_count);

struct Applied {
  NodeId output;
  std::vector<NodeId> pre;   // pre-activation of each layer
  std::vector<NodeId> post;  // post-activation of each layer
};
Applied apply_layers(Graph& g, NodeId input, const std::vector<LayerNodes>& layers);

/// Derivative of an activation given its input and output nodes.
NodeId activation_slope(Graph& g, diff::Activation act, NodeId pre, NodeId post);

/// concat of rescaled x (leading `x_columns`) and rescaled psi.
NodeId conditioning(Graph& g, const Standardization& s, NodeId x, NodeId psi, std::size_t dim_x,
                    std::size_t x_columns);
NodeId standardize_y(Graph& g, const Standardization& s, NodeId y);
NodeId unstandardize_y(Graph& g, const Standardization& s, NodeId y_std);

/// Column split used by coupling layer `layer` for a dim_y output.
struct CouplingSplit {
  std::size_t keep_begin, keep_end;
  std::size_t move_begin, move_end;
  bool keep_first;
};
CouplingSplit coupling_split(std::size_t layer, std::size_t dim_y);

/// Flow in network coordinates. forward: base noise -> y_std.
NodeId flow_forward(Graph& g, NodeId z, NodeId cond, const std::vector<std::vector<LayerNodes>>& nets,
                    std::size_t dim_y);
/// inverse: y_std -> base noise; *log_det gets the per-row sum of log scales
/// (log |det| of the forward map).
NodeId flow_inverse(Graph& g, NodeId y_std, NodeId cond, const std::vector<std::vector<LayerNodes>>& nets,
                    std::size_t dim_y, NodeId* log_det);

struct CramerInputs {
  NodeId y, cond, z1, z2, alpha, one_minus_alpha, ones;
};
struct CramerNodes {
  NodeId g1, g2;
  NodeId interpolate;    // alpha y + (1 - alpha) g1
  NodeId witness;        // f at the interpolate, per row
  NodeId witness_slope;  // d f / d interpolate, per row
  NodeId surrogate;      // mean f(y) - f(g1)
  NodeId penalty;        // mean (|slope| - 1)^2
  NodeId critic_loss;
  NodeId generator_loss;
};
/// Builds the Cramer GAN losses. The critic's input slope is propagated
/// forward through its layers as ordinary graph values.
CramerNodes build_cramer(Graph& g, const CramerInputs& in, const std::vector<LayerNodes>& gen,
                         const std::vector<LayerNodes>& critic, std::size_t dim_y, double penalty_weight);

}  // namespace lgso::surrogate::detail

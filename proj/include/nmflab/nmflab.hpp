#pragma once

// Umbrella header for the NMF-LAB library: non-negative tri-factorization
// Y ~= X Theta A with known covariates, in both the forward (regression)
// and inverse (label-matrix classification) formulations.

#include "classify.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "kernel.hpp"
#include "kmeans.hpp"
#include "matrix.hpp"
#include "model_io.hpp"
#include "modelsel.hpp"
#include "trinmf.hpp"

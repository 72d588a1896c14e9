// This file is part of psdfit, a library for fitting nonnegative and
// cone-valued functions with positive semidefinite kernel models.
//
// Copyright (c) 2026 The psdfit authors
// SPDX-License-Identifier: MIT

#ifndef PSDFIT_IO_HPP
#define PSDFIT_IO_HPP

#include <string>
#include <vector>

#include "psdfit/common.hpp"

// CSV input/output used by every subcommand.  All floating-point output goes
// through format_float (17 significant digits), which round-trips doubles
// exactly and keeps rerun outputs byte-identical.

namespace psdfit {

// Shortest-faithful decimal rendering: %.17g.
std::string format_float(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  Index n_rows() const { return static_cast<Index>(rows.size()); }
  Index n_cols() const { return static_cast<Index>(header.size()); }
  Index column_index(const std::string& name) const;  // -1 if absent
};

// Writes header + rows; every cell formatted with format_float.  Creates
// parent directories as needed.
void write_csv(const std::string& path, const CsvTable& table);

// Reads a CSV with a header row and purely numeric cells ('.' decimal
// separator).  Ragged rows or non-numeric cells raise ValidationError.
CsvTable read_csv(const std::string& path);

// Reads a whole file; throws ValidationError if missing.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace psdfit

#endif  // PSDFIT_IO_HPP

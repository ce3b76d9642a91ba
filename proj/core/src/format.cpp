#include "lsdgnn/format.hpp"

#include <charconv>
#include <system_error>

#include "lsdgnn/errors.hpp"

namespace lsdgnn {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) {
    throw ContractError("format_double: conversion failed");
  }
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("parse_double: invalid number '" + text + "'");
  }
  return value;
}

}  // namespace lsdgnn

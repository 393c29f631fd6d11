// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <string>

#include "hevid/common.hpp"

namespace hevid::cal {

// Proleptic Gregorian calendar helpers over the plain (year, month, day)
// triple; no time zones, no time of day.

inline bool is_leap(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

inline int days_in_month(int year, int month) {
  static const int md[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap(year)) return 29;
  return md[month - 1];
}

inline int days_in_year(int year) { return is_leap(year) ? 366 : 365; }

struct Date {
  int year = 0;
  int month = 0;  // 1..12
  int day = 0;    // 1..31

  friend bool operator==(const Date&, const Date&) = default;
};

inline bool valid(const Date& d) {
  return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
         d.day <= days_in_month(d.year, d.month);
}

// Day of year with January 1st mapping to 1.
inline int day_of_year(const Date& d) {
  int doy = d.day;
  for (int m = 1; m < d.month; ++m) doy += days_in_month(d.year, m);
  return doy;
}

inline Date from_day_of_year(int year, int doy) {
  require(doy >= 1 && doy <= days_in_year(year), ErrorKind::encoding,
          "day of year out of range");
  int m = 1;
  while (doy > days_in_month(year, m)) {
    doy -= days_in_month(year, m);
    ++m;
  }
  return Date{year, m, doy};
}

// Lexicographic order on (year, day-of-year); total order on dates.
inline int compare(const Date& a, const Date& b) {
  if (a.year != b.year) return a.year < b.year ? -1 : 1;
  int da = day_of_year(a), db = day_of_year(b);
  if (da != db) return da < db ? -1 : 1;
  return 0;
}

inline Date parse_iso(const std::string& s) {
  int y = 0, m = 0, d = 0;
  char extra = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d%c", &y, &m, &d, &extra) != 3)
    fail(ErrorKind::encoding, "date not in YYYY-MM-DD form: " + s);
  Date out{y, m, d};
  require(valid(out), ErrorKind::encoding, "invalid calendar date: " + s);
  return out;
}

inline std::string to_iso(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

}  // namespace hevid::cal

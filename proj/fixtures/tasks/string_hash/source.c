unsigned long string_hash(const char *s) {
  unsigned long h = 5381;
  int c;
  while ((c = (unsigned char)*s++) != 0) {
    h = h * 33 + (unsigned long)c;
  }
  return h;
}

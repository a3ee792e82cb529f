unsigned long string_hash(const char *s);

int main(void) {
  if (string_hash("") != 5381UL) return 1;
  if (string_hash("a") != 5381UL * 33 + 97) return 2;
  if (string_hash("ab") != (5381UL * 33 + 97) * 33 + 98) return 3;
  if (string_hash("abc") == string_hash("acb")) return 4;
  return 0;
}

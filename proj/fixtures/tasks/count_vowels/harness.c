int count_vowels(const char *s);

int main(void) {
  if (count_vowels("") != 0) return 1;
  if (count_vowels("rhythm") != 0) return 2;
  if (count_vowels("Education") != 5) return 3;
  if (count_vowels("AEIOU aeiou") != 10) return 4;
  return 0;
}

#include <string.h>

int count_vowels(const char *s) {
  int count = 0;
  for (; *s != '\0'; s++) {
    if (strchr("aeiouAEIOU", *s) != NULL) count++;
  }
  return count;
}

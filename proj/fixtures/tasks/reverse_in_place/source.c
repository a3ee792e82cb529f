#include <string.h>

void reverse_in_place(char *s) {
  size_t len = strlen(s);
  if (len < 2) return;
  size_t i = 0;
  size_t j = len - 1;
  while (i < j) {
    char t = s[i];
    s[i] = s[j];
    s[j] = t;
    i++;
    j--;
  }
}

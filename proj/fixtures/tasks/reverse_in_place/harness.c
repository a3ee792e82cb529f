#include <string.h>

void reverse_in_place(char *s);

int main(void) {
  char empty[] = "";
  char one[] = "x";
  char even[] = "abcd";
  char odd[] = "hello";
  reverse_in_place(empty);
  reverse_in_place(one);
  reverse_in_place(even);
  reverse_in_place(odd);
  if (strcmp(empty, "") != 0) return 1;
  if (strcmp(one, "x") != 0) return 2;
  if (strcmp(even, "dcba") != 0) return 3;
  if (strcmp(odd, "olleh") != 0) return 4;
  return 0;
}

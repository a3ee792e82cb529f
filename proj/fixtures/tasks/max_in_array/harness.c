int max_in_array(const int *a, int n);

int main(void) {
  int one[] = {-4};
  int mixed[] = {3, -1, 12, 7, 12, 0};
  int negative[] = {-9, -3, -5};
  if (max_in_array(one, 1) != -4) return 1;
  if (max_in_array(mixed, 6) != 12) return 2;
  if (max_in_array(negative, 3) != -3) return 3;
  return 0;
}

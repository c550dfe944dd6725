int vendored_format(int x)
{
  return x;
}

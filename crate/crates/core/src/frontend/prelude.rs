// Library declarations with their checked interfaces.
pub const PRELUDE: &str = "\
_Itype_for_any(T) void *malloc(size_t size) : itype(_Array_ptr<T>) byte_count(size);
_Itype_for_any(T) void *calloc(size_t nmemb, size_t size) : itype(_Array_ptr<T>) byte_count(nmemb * size);
_Itype_for_any(T) void free(void *pointer : itype(_Ptr<T>));
size_t strlen(const char *s : itype(_Nt_array_ptr<const char>));
_Itype_for_any(T) void bzero(void *dest : itype(_Array_ptr<T>) byte_count(n), size_t n);
";

pub const ALLOCATORS: &[&str] = &["malloc", "calloc"];

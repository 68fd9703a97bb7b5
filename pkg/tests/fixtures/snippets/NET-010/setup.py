r = urllib.request.urlopen("http://
  http_domain, data=data_post.encode(), timeout=10)
